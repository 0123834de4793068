//! Article ingestion: canonical-schema parsing, the publisher-XML adapter,
//! corpus loading with an exclusion report, full-length filtering, and the
//! derived metadata covariates (review time, region).

pub mod region;
pub mod schema;
pub mod xml;

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
pub use region::{normalize_region, Region};
pub use schema::{
    is_valid_doi, normalize_doi, parse_article, ArticleRecord, ArticleType, Author, Journal,
};
pub use xml::parse_publisher_xml;

/// One excluded document and why.
#[derive(Debug, Clone, Serialize)]
pub struct Exclusion {
    pub source: String,
    pub reason: String,
}

/// Parsed corpus plus its exclusion report.
#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub records: Vec<ArticleRecord>,
    pub exclusions: Vec<Exclusion>,
}

/// Load a corpus from a file (`.jsonl` one object per line, `.json` / `.xml`
/// single document) or a directory of such files. Rejected documents and
/// duplicate DOIs land in the exclusion report.
pub fn load_corpus(path: &Path) -> Result<IngestOutcome> {
    let mut out = IngestOutcome::default();
    if path.is_dir() {
        let mut entries: Vec<_> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                matches!(
                    p.extension().and_then(|s| s.to_str()),
                    Some("json") | Some("jsonl") | Some("xml")
                )
            })
            .collect();
        entries.sort();
        for entry in entries {
            ingest_file(&entry, &mut out)?;
        }
    } else {
        ingest_file(path, &mut out)?;
    }
    dedupe_dois(&mut out);
    Ok(out)
}

fn ingest_file(path: &Path, out: &mut IngestOutcome) -> Result<()> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    match path.extension().and_then(|s| s.to_str()) {
        Some("jsonl") => {
            for (i, line) in raw.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let source = format!("{name}:{}", i + 1);
                collect(schema::parse_article(line), source, out);
            }
            Ok(())
        }
        Some("xml") => {
            collect(xml::parse_publisher_xml(&raw), name, out);
            Ok(())
        }
        _ => {
            collect(schema::parse_article(&raw), name, out);
            Ok(())
        }
    }
}

fn collect(parsed: Result<ArticleRecord>, source: String, out: &mut IngestOutcome) {
    match parsed {
        Ok(rec) => out.records.push(rec),
        Err(e) => out.exclusions.push(Exclusion {
            source,
            reason: e.to_string(),
        }),
    }
}

fn dedupe_dois(out: &mut IngestOutcome) {
    let mut seen = std::collections::BTreeSet::new();
    let mut kept = Vec::with_capacity(out.records.len());
    for rec in out.records.drain(..) {
        if seen.insert(rec.doi.clone()) {
            kept.push(rec);
        } else {
            out.exclusions.push(Exclusion {
                source: rec.doi.clone(),
                reason: format!("duplicate doi: {}", rec.doi),
            });
        }
    }
    out.records = kept;
}

/// Keep only full-length research articles, preserving order.
pub fn filter_full_length(records: &[ArticleRecord]) -> Vec<ArticleRecord> {
    records
        .iter()
        .filter(|r| r.article_type == ArticleType::FullLength)
        .cloned()
        .collect()
}

/// Review time in whole days with an explicit missing flag for model
/// building; a negative interval is a data error (flagged, value missing).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReviewTime {
    pub days: Option<u32>,
    pub missing: bool,
    pub flagged: bool,
}

pub fn compute_review_time(record: &ArticleRecord) -> ReviewTime {
    match (record.received_date, record.accepted_date) {
        (Some(received), Some(accepted)) => {
            let days = (accepted - received).num_days();
            if days < 0 {
                ReviewTime {
                    days: None,
                    missing: true,
                    flagged: true,
                }
            } else {
                ReviewTime {
                    days: Some(days as u32),
                    missing: false,
                    flagged: false,
                }
            }
        }
        _ => ReviewTime {
            days: None,
            missing: true,
            flagged: false,
        },
    }
}

/// Region of the paper for modeling: corresponding author's country,
/// falling back to the first author, Unknown when nothing resolves.
pub fn paper_region(record: &ArticleRecord) -> Region {
    record
        .effective_country()
        .map(normalize_region)
        .unwrap_or(Region::Unknown)
}

/// All distinct regions across the author list (affiliation spread).
pub fn listed_regions(record: &ArticleRecord) -> std::collections::BTreeSet<Region> {
    record
        .authors
        .iter()
        .filter_map(|a| a.country.as_deref())
        .map(normalize_region)
        .filter(|r| *r != Region::Unknown)
        .collect()
}

/// Write the normalized corpus as canonical JSONL.
pub fn write_corpus_jsonl(records: &[ArticleRecord], path: &Path) -> Result<()> {
    let mut buf = String::new();
    for rec in records {
        buf.push_str(
            &serde_json::to_string(rec)
                .map_err(|e| Error::InvalidInput(format!("serialize: {e}")))?,
        );
        buf.push('\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Write the exclusion report CSV (source, reason).
pub fn write_exclusions_csv(exclusions: &[Exclusion], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::InvalidInput(format!("csv {}: {e}", path.display())))?;
    w.write_record(["source", "reason"])
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    for ex in exclusions {
        w.write_record([&ex.source, &ex.reason])
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn record(article_type: ArticleType) -> ArticleRecord {
        let mut r = schema::parse_article(&test_doc("10.1016/base")).unwrap();
        r.article_type = article_type;
        r
    }

    fn test_doc(doi: &str) -> String {
        format!(
            r#"{{"doi":"{doi}","title":"T","journal":"TR-C","article_type":"full-length","year":2024,"authors":[{{"name":"A","country":"FR"}}],"abstract":"a","keywords":"k","body_text":"b","references_text":"r","n_figures":1,"n_tables":2,"n_references":3,"n_pages":4,"open_access":true}}"#
        )
    }

    #[test]
    fn filter_keeps_only_full_length() {
        let records = vec![
            record(ArticleType::FullLength),
            record(ArticleType::Editorial),
            record(ArticleType::Review),
        ];
        let kept = filter_full_length(&records);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].article_type, ArticleType::FullLength);
        assert!(filter_full_length(&[]).is_empty());
    }

    #[test]
    fn review_time_cases() {
        let mut r = record(ArticleType::FullLength);
        r.received_date = NaiveDate::from_ymd_opt(2020, 1, 1);
        r.accepted_date = NaiveDate::from_ymd_opt(2020, 3, 1);
        let rt = compute_review_time(&r);
        assert_eq!(rt.days, Some(60));
        assert!(!rt.missing && !rt.flagged);

        r.received_date = None;
        let rt = compute_review_time(&r);
        assert_eq!(rt.days, None);
        assert!(rt.missing && !rt.flagged);

        r.received_date = NaiveDate::from_ymd_opt(2020, 5, 1);
        r.accepted_date = NaiveDate::from_ymd_opt(2020, 4, 1);
        let rt = compute_review_time(&r);
        assert_eq!(rt.days, None);
        assert!(rt.missing && rt.flagged);
    }

    #[test]
    fn corpus_with_invalid_dois_yields_exclusion_report() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let mut lines = Vec::new();
        for i in 0..10 {
            lines.push(test_doc(&format!("10.1016/j.trc.2024.{i}")));
        }
        lines.push(test_doc("not-a-doi"));
        lines.push(test_doc("also bad"));
        std::fs::write(&path, lines.join("\n")).unwrap();
        let out = load_corpus(&path).unwrap();
        assert_eq!(out.records.len(), 10);
        assert_eq!(out.exclusions.len(), 2);
        assert!(out.exclusions[0].reason.contains("invalid doi"));
    }

    #[test]
    fn duplicate_doi_excluded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let lines = [test_doc("10.1016/a"), test_doc("10.1016/A"), test_doc("10.1016/b")];
        std::fs::write(&path, lines.join("\n")).unwrap();
        let out = load_corpus(&path).unwrap();
        assert_eq!(out.records.len(), 2, "10.1016/A normalizes to 10.1016/a");
        assert_eq!(out.exclusions.len(), 1);
        assert!(out.exclusions[0].reason.contains("duplicate"));
    }

    #[test]
    fn corpus_roundtrip_via_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let lines = [test_doc("10.1016/a"), test_doc("10.1016/b")];
        std::fs::write(&path, lines.join("\n")).unwrap();
        let out = load_corpus(&path).unwrap();
        let norm = dir.path().join("norm.jsonl");
        write_corpus_jsonl(&out.records, &norm).unwrap();
        let back = load_corpus(&norm).unwrap();
        assert_eq!(out.records, back.records);
    }

    #[test]
    fn regions_from_authors() {
        let mut r = record(ArticleType::FullLength);
        assert_eq!(paper_region(&r), Region::Europe);
        r.authors.push(Author {
            name: "B".into(),
            country: Some("Brazil".into()),
        });
        let listed = listed_regions(&r);
        assert!(listed.contains(&Region::Europe));
        assert!(listed.contains(&Region::SouthAmerica));
        r.corresponding_country = Some("CN".into());
        assert_eq!(paper_region(&r), Region::Asia);
    }
}
