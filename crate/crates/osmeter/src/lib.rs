//! Measurement of open-science practice (code and data availability) in a
//! corpus of full-text research articles.
//!
//! The library ingests article records, assigns topics with LDA, extracts
//! availability features through a pluggable language-model provider (or a
//! text-search baseline), audits outbound links, computes inter-rater
//! agreement against human labels, estimates logit choice models of
//! availability, and emits relational analysis tables plus summary reports.
//!
//! The `osmeter` binary wires these stages into a batch pipeline; every stage
//! is also usable as a library module.

pub mod agreement;
pub mod availability;
pub mod config;
pub mod error;
pub mod extract;
pub mod ingest;
pub mod links;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod table;
pub mod topics;

pub use error::{Error, Result};
