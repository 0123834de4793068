//! Link audit: URL extraction, canonization, host classification, liveness
//! validation, and the per-paper link table.

pub mod audit;
pub mod canonize;
pub mod classify;
pub mod extract;
pub mod testserver;
pub mod validate;

pub use audit::{
    apply_validation, audit_corpus, audit_paper_links, write_links_csv, LinkCounts, LinkRecord,
};
pub use canonize::{canonize_url, CanonicalUrl};
pub use classify::{classify_host, HostCategory};
pub use extract::extract_urls;
pub use validate::{
    validate_link, validate_links, ContentKindHint, Liveness, ValidationOutcome, ValidationPolicy,
};
