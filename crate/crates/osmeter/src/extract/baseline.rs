//! Text-search baseline for availability features. Deliberately naive: it
//! scans the whole text including the reference list, which is exactly why
//! it overestimates code availability relative to careful extraction.

use crate::extract::{FeatureExtraction, Source};
use crate::ingest::ArticleRecord;
use crate::links::{canonize_url, classify_host, extract_urls, HostCategory};

const DATASET_KEYWORDS: &[&str] = &[
    "ngsim",
    "sioux falls",
    "waymo",
    "nuscenes",
    "highd dataset",
    "open data",
    "openstreetmap",
    "publicly available dataset",
    "public dataset",
];

const QUANT_KEYWORDS: &[&str] = &[
    "model",
    "simulation",
    "regression",
    "algorithm",
    "optimization",
    "estimate",
    "statistical",
    "numerical",
];

/// Regex/keyword heuristics over the full text:
/// code availability from any code-host URL, data citation from dataset
/// keywords or data-portal links, quantitativeness from method keywords,
/// repository availability from any open-repository URL.
pub fn baseline_text_search(record: &ArticleRecord) -> FeatureExtraction {
    let text = record.full_text();
    let lower = text.to_lowercase();

    let mut code_links = Vec::new();
    let mut data_links = Vec::new();
    let mut has_open_repo = false;
    let mut has_data_portal = false;
    for raw in extract_urls(&text) {
        let canonical = canonize_url(&raw);
        match classify_host(&canonical.url) {
            HostCategory::CodeHost => code_links.push(raw),
            HostCategory::OpenRepoDoi => {
                has_open_repo = true;
                data_links.push(raw);
            }
            HostCategory::GovOpenData | HostCategory::BenchmarkHub => {
                has_data_portal = true;
                data_links.push(raw);
            }
            _ => {}
        }
    }

    let has_dataset_keyword = DATASET_KEYWORDS.iter().any(|k| lower.contains(k));
    let is_quant = QUANT_KEYWORDS.iter().any(|k| lower.contains(k));
    let code_available = !code_links.is_empty();

    let mut features = FeatureExtraction::new(&record.doi, Source::Baseline);
    features.is_quantitative_study = Some(is_quant);
    features.is_code_used = Some(code_available || is_quant);
    features.is_code_publicly_available = Some(code_available);
    features.is_data_cited = Some(has_dataset_keyword || has_data_portal || has_open_repo);
    features.is_data_repository_available = Some(has_open_repo);
    features.code_links = code_links;
    features.data_links = data_links;
    features
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_article;

    fn record(body: &str, references: &str) -> ArticleRecord {
        let doc = serde_json::json!({
            "doi": "10.1016/base",
            "title": "T",
            "journal": "TR-C",
            "article_type": "full-length",
            "year": 2024,
            "authors": [],
            "abstract": "",
            "keywords": "",
            "body_text": body,
            "references_text": references,
            "n_figures": 0,
            "n_tables": 0,
            "n_references": 0,
            "n_pages": 1,
            "open_access": false
        });
        parse_article(&doc.to_string()).unwrap()
    }

    #[test]
    fn citation_only_link_overestimates() {
        // the only code-host URL lives in a reference entry
        let r = record(
            "We solve the problem by hand.",
            "[12] Smith, tool paper, https://github.com/smith/tool",
        );
        let f = baseline_text_search(&r);
        assert_eq!(f.is_code_publicly_available, Some(true));
    }

    #[test]
    fn nothing_found_is_all_false() {
        let r = record("Plain prose.", "Refs without links.");
        let f = baseline_text_search(&r);
        assert_eq!(f.is_code_publicly_available, Some(false));
        assert_eq!(f.is_data_cited, Some(false));
        assert_eq!(f.is_quantitative_study, Some(false));
        assert_eq!(f.is_data_repository_available, Some(false));
    }

    #[test]
    fn open_repo_link_sets_repository_and_citation() {
        let r = record("Data at https://zenodo.org/record/9.", "");
        let f = baseline_text_search(&r);
        assert_eq!(f.is_data_repository_available, Some(true));
        assert_eq!(f.is_data_cited, Some(true));
        assert_eq!(f.data_links.len(), 1);
    }

    #[test]
    fn keywords_drive_quant_and_citation() {
        let r = record("We calibrate a regression model on the NGSIM data.", "");
        let f = baseline_text_search(&r);
        assert_eq!(f.is_quantitative_study, Some(true));
        assert_eq!(f.is_data_cited, Some(true));
        assert_eq!(f.is_data_repository_available, Some(false));
    }
}
