//! Per-paper link audit: union of text- and feature-sourced URLs, canonize,
//! dedupe on (doi, canonical), classify, optional liveness validation, and
//! per-category counts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::FeatureExtraction;
use crate::ingest::ArticleRecord;
use crate::links::canonize::canonize_url;
use crate::links::classify::{classify_host, HostCategory};
use crate::links::extract::extract_urls;
use crate::links::validate::{ContentKindHint, Liveness, ValidationOutcome, ValidationPolicy};

/// One DOI-URL pair with canonical form, host category, and liveness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub doi: String,
    pub raw_url: String,
    pub canonical_url: String,
    pub host_category: HostCategory,
    pub liveness: Liveness,
    pub content_kind_hint: ContentKindHint,
    pub checked_at: Option<String>,
}

/// Per-paper aggregates matching the analysis-table column names.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinkCounts {
    pub per_category: BTreeMap<HostCategory, u32>,
    pub n_code_links: u32,
    pub n_open_repo: u32,
    pub has_code_link_gitlab: bool,
    pub has_code_link_bitbucket: bool,
}

impl LinkCounts {
    pub fn category(&self, cat: HostCategory) -> u32 {
        self.per_category.get(&cat).copied().unwrap_or(0)
    }
}

/// Audit one paper's links without network access (liveness unchecked).
pub fn audit_paper_links(
    record: &ArticleRecord,
    features: Option<&FeatureExtraction>,
) -> (Vec<LinkRecord>, LinkCounts) {
    let mut raw_urls = extract_urls(&record.full_text());
    if let Some(f) = features {
        raw_urls.extend(f.code_links.iter().cloned());
        raw_urls.extend(f.data_links.iter().cloned());
    }

    let mut seen = std::collections::BTreeSet::new();
    let mut records = Vec::new();
    for raw in raw_urls {
        let canonical = canonize_url(&raw);
        if !seen.insert(canonical.url.clone()) {
            continue; // dedupe on (doi, canonical_url); first occurrence wins
        }
        let host_category = classify_host(&canonical.url);
        records.push(LinkRecord {
            doi: record.doi.clone(),
            raw_url: raw,
            canonical_url: canonical.url,
            host_category,
            liveness: Liveness::Unchecked,
            content_kind_hint: ContentKindHint::Unknown,
            checked_at: None,
        });
    }
    records.sort_by(|a, b| a.canonical_url.cmp(&b.canonical_url));
    let counts = count_links(&records);
    (records, counts)
}

/// Apply validation outcomes (keyed by canonical URL) onto link records.
pub fn apply_validation(
    records: &mut [LinkRecord],
    outcomes: &BTreeMap<String, ValidationOutcome>,
    checked_at: &str,
) {
    for rec in records.iter_mut() {
        if let Some(out) = outcomes.get(&rec.canonical_url) {
            rec.liveness = out.liveness;
            rec.content_kind_hint = out.content_kind;
            rec.checked_at = Some(checked_at.to_string());
        }
    }
}

fn count_links(records: &[LinkRecord]) -> LinkCounts {
    let mut counts = LinkCounts::default();
    for cat in HostCategory::all() {
        counts.per_category.insert(cat, 0);
    }
    for rec in records {
        *counts.per_category.entry(rec.host_category).or_insert(0) += 1;
        if rec.host_category == HostCategory::CodeHost {
            counts.n_code_links += 1;
            let host = url::Url::parse(&rec.canonical_url)
                .ok()
                .and_then(|u| u.host_str().map(str::to_string))
                .unwrap_or_default();
            if host == "gitlab.com" || host.ends_with(".gitlab.com") {
                counts.has_code_link_gitlab = true;
            }
            if host == "bitbucket.org" || host.ends_with(".bitbucket.org") {
                counts.has_code_link_bitbucket = true;
            }
        }
        if rec.host_category == HostCategory::OpenRepoDoi {
            counts.n_open_repo += 1;
        }
    }
    counts
}

/// Audit a whole corpus; rows come out sorted by (doi, canonical_url).
pub fn audit_corpus(
    records: &[ArticleRecord],
    features: &[FeatureExtraction],
    validation: Option<&ValidationPolicy>,
) -> (Vec<LinkRecord>, BTreeMap<String, LinkCounts>) {
    let by_doi: BTreeMap<&str, &FeatureExtraction> =
        features.iter().map(|f| (f.doi.as_str(), f)).collect();
    let mut all_links = Vec::new();
    let mut counts = BTreeMap::new();
    for record in records {
        let (mut links, _) = audit_paper_links(record, by_doi.get(record.doi.as_str()).copied());
        if let Some(policy) = validation {
            let urls: Vec<String> = links.iter().map(|l| l.canonical_url.clone()).collect();
            let outcomes = crate::links::validate::validate_links(&urls, policy);
            let now = chrono::Utc::now().to_rfc3339();
            apply_validation(&mut links, &outcomes, &now);
        }
        let c = count_links(&links);
        counts.insert(record.doi.clone(), c);
        all_links.extend(links);
    }
    all_links.sort_by(|a, b| (&a.doi, &a.canonical_url).cmp(&(&b.doi, &b.canonical_url)));
    (all_links, counts)
}

/// links.csv with the exact audit columns.
pub fn write_links_csv(records: &[LinkRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::InvalidInput(format!("csv {}: {e}", path.display())))?;
    w.write_record([
        "doi",
        "raw_url",
        "canonical_url",
        "host_category",
        "liveness",
        "content_kind_hint",
        "checked_at",
    ])
    .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    for r in records {
        w.write_record([
            r.doi.as_str(),
            r.raw_url.as_str(),
            r.canonical_url.as_str(),
            r.host_category.as_str(),
            r.liveness.as_str(),
            r.content_kind_hint.as_str(),
            r.checked_at.as_deref().unwrap_or(""),
        ])
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::Source;

    fn record(doi: &str, body: &str, references: &str) -> ArticleRecord {
        let doc = serde_json::json!({
            "doi": doi,
            "title": "T",
            "journal": "TR-C",
            "article_type": "full-length",
            "year": 2024,
            "authors": [],
            "abstract": "",
            "keywords": "",
            "body_text": body,
            "references_text": references,
            "n_figures": 0, "n_tables": 0, "n_references": 0, "n_pages": 1,
            "open_access": false
        });
        crate::ingest::parse_article(&doc.to_string()).unwrap()
    }

    #[test]
    fn same_url_in_text_and_features_dedupes() {
        let r = record("10.1016/a", "Code at https://github.com/x/y.", "");
        let mut f = FeatureExtraction::new("10.1016/a", Source::Llm);
        f.code_links.push("https://github.com/x/y".into());
        let (links, counts) = audit_paper_links(&r, Some(&f));
        assert_eq!(links.len(), 1);
        assert_eq!(counts.n_code_links, 1);
        assert_eq!(links[0].liveness, Liveness::Unchecked);
    }

    #[test]
    fn category_counts_per_paper() {
        let r = record(
            "10.1016/b",
            "See https://zenodo.org/record/5 and https://github.com/a/b and https://data.gov/x.",
            "",
        );
        let (_, counts) = audit_paper_links(&r, None);
        assert_eq!(counts.category(HostCategory::OpenRepoDoi), 1);
        assert_eq!(counts.category(HostCategory::CodeHost), 1);
        assert_eq!(counts.category(HostCategory::GovOpenData), 1);
        assert_eq!(counts.n_open_repo, 1);
    }

    #[test]
    fn gitlab_and_bitbucket_flags() {
        let r = record(
            "10.1016/c",
            "https://gitlab.com/a/b plus https://bitbucket.org/c/d",
            "",
        );
        let (_, counts) = audit_paper_links(&r, None);
        assert!(counts.has_code_link_gitlab);
        assert!(counts.has_code_link_bitbucket);
        assert_eq!(counts.n_code_links, 2);
    }

    #[test]
    fn every_url_gets_exactly_one_record_and_category() {
        let r = record(
            "10.1016/d",
            "https://a.example/x https://b.example/y https://a.example/x",
            "",
        );
        let (links, _) = audit_paper_links(&r, None);
        assert_eq!(links.len(), 2, "duplicates collapse");
        let mut seen = std::collections::BTreeSet::new();
        for l in &links {
            assert!(seen.insert((l.doi.clone(), l.canonical_url.clone())));
        }
    }

    #[test]
    fn corpus_table_is_sorted_and_deterministic() {
        let r1 = record("10.1016/b", "https://github.com/z/z https://github.com/a/a", "");
        let r2 = record("10.1016/a", "https://zenodo.org/record/1", "");
        let (links1, _) = audit_corpus(&[r1.clone(), r2.clone()], &[], None);
        let (links2, _) = audit_corpus(&[r1, r2], &[], None);
        assert_eq!(links1, links2);
        let keys: Vec<(String, String)> = links1
            .iter()
            .map(|l| (l.doi.clone(), l.canonical_url.clone()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
