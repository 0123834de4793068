//! Availability decision rules and the relational analysis tables.
//!
//! Code availability is CA/CU for quantitative papers and NotApplicable
//! otherwise; data availability is the four-way (cited?, repository?)
//! taxonomy. Missing feature booleans classify as false but carry a
//! completeness flag so analyses can exclude flagged rows.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::extract::FeatureExtraction;
use crate::ingest::{compute_review_time, listed_regions, paper_region, ArticleRecord, Region};
use crate::links::{HostCategory, LinkCounts, LinkRecord};
use crate::table::{Column, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodeAvailability {
    #[serde(rename = "CA")]
    Available,
    #[serde(rename = "CU")]
    Unavailable,
    #[serde(rename = "NA")]
    NotApplicable,
}

impl CodeAvailability {
    pub fn as_str(&self) -> &'static str {
        match self {
            CodeAvailability::Available => "CA",
            CodeAvailability::Unavailable => "CU",
            CodeAvailability::NotApplicable => "NA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DataAvailability {
    #[serde(rename = "NC_NR")]
    NotCitedNoRepo,
    #[serde(rename = "NC_R")]
    NotCitedRepo,
    #[serde(rename = "C_NR")]
    CitedNoRepo,
    #[serde(rename = "C_R")]
    CitedRepo,
}

impl DataAvailability {
    pub fn as_str(&self) -> &'static str {
        match self {
            DataAvailability::NotCitedNoRepo => "NC_NR",
            DataAvailability::NotCitedRepo => "NC_R",
            DataAvailability::CitedNoRepo => "C_NR",
            DataAvailability::CitedRepo => "C_R",
        }
    }

    pub fn all() -> [DataAvailability; 4] {
        [
            DataAvailability::NotCitedNoRepo,
            DataAvailability::NotCitedRepo,
            DataAvailability::CitedNoRepo,
            DataAvailability::CitedRepo,
        ]
    }
}

/// Classification plus a completeness flag (true when an input boolean was
/// missing and defaulted to false).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classified<T> {
    pub value: T,
    pub flagged: bool,
}

/// Code availability rule. Link liveness does not matter: a stated link
/// counts even when dead (liveness is tracked separately in the link table).
pub fn classify_code(
    features: &FeatureExtraction,
    _links: &[LinkRecord],
) -> Classified<CodeAvailability> {
    if features.is_quantitative_study == Some(false) {
        return Classified {
            value: CodeAvailability::NotApplicable,
            flagged: false,
        };
    }
    let flagged = features.is_quantitative_study.is_none()
        || features.is_code_publicly_available.is_none();
    let value = if features.is_code_publicly_available == Some(true) {
        CodeAvailability::Available
    } else {
        CodeAvailability::Unavailable
    };
    Classified { value, flagged }
}

/// Four-way data availability from (cited?, repository?).
pub fn classify_data(features: &FeatureExtraction) -> Classified<DataAvailability> {
    let flagged =
        features.is_data_cited.is_none() || features.is_data_repository_available.is_none();
    let cited = features.is_data_cited.unwrap_or(false);
    let repo = features.is_data_repository_available.unwrap_or(false);
    let value = match (cited, repo) {
        (false, false) => DataAvailability::NotCitedNoRepo,
        (false, true) => DataAvailability::NotCitedRepo,
        (true, false) => DataAvailability::CitedNoRepo,
        (true, true) => DataAvailability::CitedRepo,
    };
    Classified { value, flagged }
}

/// The three relational tables keyed by DOI.
#[derive(Debug, Clone)]
pub struct AnalysisTables {
    pub paper_table: Table,
    pub artifact_table: Table,
    pub link_table: Table,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub rule: String,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IntegrityReport {
    pub violations: Vec<Violation>,
    /// DOIs excluded from the paper table.
    pub excluded: Vec<String>,
}

impl IntegrityReport {
    pub fn errors(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| v.severity == Severity::Error)
            .count()
    }
}

/// Assembly options: the reference date anchoring paper age.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub reference_date: NaiveDate,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            reference_date: chrono::Utc::now().date_naive(),
        }
    }
}

/// Join records, features, links, and topic assignments into the analysis
/// tables. Duplicate DOIs are excluded and reported; coherence problems are
/// warnings on retained rows.
pub fn build_tables(
    records: &[ArticleRecord],
    features: &[FeatureExtraction],
    links: &[LinkRecord],
    link_counts: &BTreeMap<String, LinkCounts>,
    topics: &BTreeMap<String, usize>,
    options: &BuildOptions,
) -> Result<(AnalysisTables, IntegrityReport)> {
    let mut report = IntegrityReport::default();

    // duplicate DOIs invalidate every copy
    let mut doi_count: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *doi_count.entry(r.doi.as_str()).or_insert(0) += 1;
    }
    for (doi, count) in &doi_count {
        if *count > 1 {
            report.violations.push(Violation {
                rule: "doi-unique".into(),
                severity: Severity::Error,
                message: format!("doi {doi} appears in {count} records; all copies excluded"),
            });
            report.excluded.push((*doi).to_string());
        }
    }
    let retained: Vec<&ArticleRecord> = records
        .iter()
        .filter(|r| doi_count[r.doi.as_str()] == 1)
        .collect();

    let features_by_doi: BTreeMap<&str, &FeatureExtraction> =
        features.iter().map(|f| (f.doi.as_str(), f)).collect();
    let empty_counts = LinkCounts::default();

    let n = retained.len();
    let mut col = PaperColumns::with_capacity(n);
    for record in &retained {
        let doi = record.doi.as_str();
        let feats = features_by_doi.get(doi).copied();
        let fallback = FeatureExtraction::new(doi, crate::extract::Source::Llm);
        let feats_ref = feats.unwrap_or(&fallback);
        if feats.is_none() {
            report.violations.push(Violation {
                rule: "features-present".into(),
                severity: Severity::Warning,
                message: format!("doi {doi} has no feature extraction; fields missing"),
            });
        }
        let counts = link_counts.get(doi).unwrap_or(&empty_counts);
        let doi_links: Vec<&LinkRecord> = links.iter().filter(|l| l.doi == doi).collect();

        let code = classify_code(feats_ref, &[]);
        let data = classify_data(feats_ref);

        // flag-link coherence: CA needs a recorded code link or a stated
        // availability quote
        if code.value == CodeAvailability::Available {
            let has_code_link = counts.n_code_links > 0;
            let has_quote = feats_ref
                .justification_quotes
                .get("reason_code_available")
                .map(|q| !q.is_empty())
                .unwrap_or(false)
                || feats_ref
                    .justification_quotes
                    .get("availability_statement_quote")
                    .map(|q| !q.is_empty())
                    .unwrap_or(false);
            if !has_code_link && !has_quote {
                report.violations.push(Violation {
                    rule: "flag-link-coherence".into(),
                    severity: Severity::Warning,
                    message: format!("doi {doi}: CA without code link or availability quote"),
                });
            }
        }

        col.push_row(record, feats_ref, counts, &doi_links, topics, code, data, options);
    }

    let paper_table = col.into_table()?;
    let artifact_table = build_artifact_table(&retained, &features_by_doi, links, &mut report)?;
    let link_table = build_link_table(links, &paper_table, &mut report)?;

    Ok((
        AnalysisTables {
            paper_table,
            artifact_table,
            link_table,
        },
        report,
    ))
}

struct PaperColumns {
    doi: Vec<Option<String>>,
    title: Vec<Option<String>>,
    journal: Vec<Option<String>>,
    year: Vec<Option<i64>>,
    open_access: Vec<Option<bool>>,
    n_figures: Vec<Option<i64>>,
    n_tables: Vec<Option<i64>>,
    n_references: Vec<Option<i64>>,
    n_pages: Vec<Option<i64>>,
    n_authors: Vec<Option<i64>>,
    review_time: Vec<Option<f64>>,
    review_time_missing: Vec<Option<bool>>,
    lda_topic: Vec<Option<i64>>,
    region_normalized: Vec<Option<String>>,
    region_flags: BTreeMap<Region, Vec<Option<bool>>>,
    n_regions_listed: Vec<Option<i64>>,
    paper_age_years: Vec<Option<f64>>,
    availability_statement_present: Vec<Option<bool>>,
    feature_bools: BTreeMap<&'static str, Vec<Option<bool>>>,
    code_availability: Vec<Option<String>>,
    code_class_flagged: Vec<Option<bool>>,
    data_availability: Vec<Option<String>>,
    data_class_flagged: Vec<Option<bool>>,
    n_code_links: Vec<Option<i64>>,
    n_open_repo: Vec<Option<i64>>,
    has_code_link_gitlab: Vec<Option<bool>>,
    has_code_link_bitbucket: Vec<Option<bool>>,
    category_counts: BTreeMap<HostCategory, Vec<Option<i64>>>,
}

const FEATURE_BOOLS: [&str; 7] = [
    "is_quantitative_study",
    "is_code_used",
    "is_code_publicly_available",
    "is_data_used",
    "is_simulation_study",
    "is_data_cited",
    "is_data_repository_available",
];

impl PaperColumns {
    fn with_capacity(n: usize) -> Self {
        let mut region_flags = BTreeMap::new();
        for r in Region::known() {
            region_flags.insert(r, Vec::with_capacity(n));
        }
        let mut feature_bools = BTreeMap::new();
        for f in FEATURE_BOOLS {
            feature_bools.insert(f, Vec::with_capacity(n));
        }
        let mut category_counts = BTreeMap::new();
        for c in HostCategory::all() {
            category_counts.insert(c, Vec::with_capacity(n));
        }
        Self {
            doi: Vec::with_capacity(n),
            title: Vec::with_capacity(n),
            journal: Vec::with_capacity(n),
            year: Vec::with_capacity(n),
            open_access: Vec::with_capacity(n),
            n_figures: Vec::with_capacity(n),
            n_tables: Vec::with_capacity(n),
            n_references: Vec::with_capacity(n),
            n_pages: Vec::with_capacity(n),
            n_authors: Vec::with_capacity(n),
            review_time: Vec::with_capacity(n),
            review_time_missing: Vec::with_capacity(n),
            lda_topic: Vec::with_capacity(n),
            region_normalized: Vec::with_capacity(n),
            region_flags,
            n_regions_listed: Vec::with_capacity(n),
            paper_age_years: Vec::with_capacity(n),
            availability_statement_present: Vec::with_capacity(n),
            feature_bools,
            code_availability: Vec::with_capacity(n),
            code_class_flagged: Vec::with_capacity(n),
            data_availability: Vec::with_capacity(n),
            data_class_flagged: Vec::with_capacity(n),
            n_code_links: Vec::with_capacity(n),
            n_open_repo: Vec::with_capacity(n),
            has_code_link_gitlab: Vec::with_capacity(n),
            has_code_link_bitbucket: Vec::with_capacity(n),
            category_counts,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push_row(
        &mut self,
        record: &ArticleRecord,
        feats: &FeatureExtraction,
        counts: &LinkCounts,
        _links: &[&LinkRecord],
        topics: &BTreeMap<String, usize>,
        code: Classified<CodeAvailability>,
        data: Classified<DataAvailability>,
        options: &BuildOptions,
    ) {
        self.doi.push(Some(record.doi.clone()));
        self.title.push(Some(record.title.clone()));
        self.journal.push(Some(record.journal.as_str().to_string()));
        self.year.push(Some(record.year as i64));
        self.open_access.push(Some(record.open_access));
        self.n_figures.push(Some(record.n_figures as i64));
        self.n_tables.push(Some(record.n_tables as i64));
        self.n_references.push(Some(record.n_references as i64));
        self.n_pages.push(Some(record.n_pages as i64));
        self.n_authors.push(Some(record.n_authors as i64));

        let rt = compute_review_time(record);
        self.review_time.push(rt.days.map(|d| d as f64));
        self.review_time_missing.push(Some(rt.missing));

        self.lda_topic
            .push(topics.get(&record.doi).map(|&t| t as i64));

        let region = paper_region(record);
        self.region_normalized.push(Some(region.as_str().to_string()));
        for r in Region::known() {
            self.region_flags.get_mut(&r).unwrap().push(Some(r == region));
        }
        self.n_regions_listed
            .push(Some(listed_regions(record).len() as i64));

        let published = record
            .accepted_date
            .unwrap_or_else(|| NaiveDate::from_ymd_opt(record.year, 1, 1).unwrap());
        let age = (options.reference_date - published).num_days() as f64 / 365.25;
        self.paper_age_years.push(Some(age));

        self.availability_statement_present
            .push(feats.availability_statement_present);
        for name in FEATURE_BOOLS {
            let value = match name {
                "is_quantitative_study" => feats.is_quantitative_study,
                "is_code_used" => feats.is_code_used,
                "is_code_publicly_available" => feats.is_code_publicly_available,
                "is_data_used" => feats.is_data_used,
                "is_simulation_study" => feats.is_simulation_study,
                "is_data_cited" => feats.is_data_cited,
                "is_data_repository_available" => feats.is_data_repository_available,
                _ => unreachable!(),
            };
            self.feature_bools.get_mut(name).unwrap().push(value);
        }

        self.code_availability
            .push(Some(code.value.as_str().to_string()));
        self.code_class_flagged.push(Some(code.flagged));
        self.data_availability
            .push(Some(data.value.as_str().to_string()));
        self.data_class_flagged.push(Some(data.flagged));

        self.n_code_links.push(Some(counts.n_code_links as i64));
        self.n_open_repo.push(Some(counts.n_open_repo as i64));
        self.has_code_link_gitlab
            .push(Some(counts.has_code_link_gitlab));
        self.has_code_link_bitbucket
            .push(Some(counts.has_code_link_bitbucket));
        for c in HostCategory::all() {
            self.category_counts
                .get_mut(&c)
                .unwrap()
                .push(Some(counts.category(c) as i64));
        }
    }

    fn into_table(self) -> Result<Table> {
        let mut t = Table::new();
        t.push_column("doi", Column::Str(self.doi))?;
        t.push_column("title", Column::Str(self.title))?;
        t.push_column("journal", Column::Str(self.journal))?;
        t.push_column("year", Column::Int(self.year))?;
        t.push_column("open_access", Column::Bool(self.open_access))?;
        t.push_column("n_figures", Column::Int(self.n_figures))?;
        t.push_column("n_tables", Column::Int(self.n_tables))?;
        t.push_column("n_references", Column::Int(self.n_references))?;
        t.push_column("n_pages", Column::Int(self.n_pages))?;
        t.push_column("n_authors", Column::Int(self.n_authors))?;
        t.push_column("review_time", Column::Num(self.review_time))?;
        t.push_column("review_time_missing", Column::Bool(self.review_time_missing))?;
        t.push_column("lda_topic", Column::Int(self.lda_topic))?;
        t.push_column("region_normalized", Column::Str(self.region_normalized))?;
        for (r, flags) in self.region_flags {
            let name = format!("is_region_{}", region_suffix(r));
            t.push_column(name, Column::Bool(flags))?;
        }
        t.push_column("n_regions_listed", Column::Int(self.n_regions_listed))?;
        t.push_column("paper_age_years", Column::Num(self.paper_age_years))?;
        t.push_column(
            "availability_statement_present",
            Column::Bool(self.availability_statement_present),
        )?;
        for (name, values) in self.feature_bools {
            t.push_column(name, Column::Bool(values))?;
        }
        t.push_column("code_availability", Column::Str(self.code_availability))?;
        t.push_column("code_class_flagged", Column::Bool(self.code_class_flagged))?;
        t.push_column("data_availability", Column::Str(self.data_availability))?;
        t.push_column("data_class_flagged", Column::Bool(self.data_class_flagged))?;
        t.push_column("n_code_links", Column::Int(self.n_code_links))?;
        t.push_column("n_open_repo", Column::Int(self.n_open_repo))?;
        t.push_column("has_code_link_gitlab", Column::Bool(self.has_code_link_gitlab))?;
        t.push_column(
            "has_code_link_bitbucket",
            Column::Bool(self.has_code_link_bitbucket),
        )?;
        for (c, values) in self.category_counts {
            t.push_column(c.count_column(), Column::Int(values))?;
        }
        Ok(t)
    }
}

fn region_suffix(r: Region) -> &'static str {
    match r {
        Region::Africa => "africa",
        Region::Asia => "asia",
        Region::Europe => "europe",
        Region::NorthAmerica => "north_america",
        Region::Oceania => "oceania",
        Region::SouthAmerica => "south_america",
        Region::Unknown => "unknown",
    }
}

fn build_artifact_table(
    retained: &[&ArticleRecord],
    features_by_doi: &BTreeMap<&str, &FeatureExtraction>,
    links: &[LinkRecord],
    report: &mut IntegrityReport,
) -> Result<Table> {
    let link_by_key: BTreeMap<(String, String), &LinkRecord> = links
        .iter()
        .map(|l| ((l.doi.clone(), l.canonical_url.clone()), l))
        .collect();
    let retained_dois: std::collections::BTreeSet<&str> =
        retained.iter().map(|r| r.doi.as_str()).collect();

    let mut doi = Vec::new();
    let mut kind = Vec::new();
    let mut raw_url = Vec::new();
    let mut canonical = Vec::new();
    let mut category = Vec::new();
    let mut liveness = Vec::new();

    let mut rows: Vec<(String, &str, String)> = Vec::new();
    for (d, f) in features_by_doi {
        for u in &f.code_links {
            rows.push(((*d).to_string(), "code", u.clone()));
        }
        for u in &f.data_links {
            rows.push(((*d).to_string(), "data", u.clone()));
        }
    }
    rows.sort();
    for (d, k, u) in rows {
        if !retained_dois.contains(d.as_str()) {
            report.violations.push(Violation {
                rule: "referential-integrity".into(),
                severity: Severity::Error,
                message: format!("artifact row for unknown doi {d} dropped"),
            });
            continue;
        }
        let canon = crate::links::canonize_url(&u);
        let link = link_by_key.get(&(d.clone(), canon.url.clone()));
        doi.push(Some(d));
        kind.push(Some(k.to_string()));
        raw_url.push(Some(u));
        canonical.push(Some(canon.url.clone()));
        category.push(Some(
            link.map(|l| l.host_category)
                .unwrap_or_else(|| crate::links::classify_host(&canon.url))
                .as_str()
                .to_string(),
        ));
        liveness.push(Some(
            link.map(|l| l.liveness.as_str())
                .unwrap_or("unchecked")
                .to_string(),
        ));
    }

    let mut t = Table::new();
    t.push_column("doi", Column::Str(doi))?;
    t.push_column("artifact_kind", Column::Str(kind))?;
    t.push_column("raw_url", Column::Str(raw_url))?;
    t.push_column("canonical_url", Column::Str(canonical))?;
    t.push_column("host_category", Column::Str(category))?;
    t.push_column("liveness", Column::Str(liveness))?;
    Ok(t)
}

fn build_link_table(
    links: &[LinkRecord],
    paper_table: &Table,
    report: &mut IntegrityReport,
) -> Result<Table> {
    let retained: std::collections::BTreeSet<String> = {
        let col = paper_table.column("doi")?;
        (0..paper_table.n_rows())
            .filter_map(|i| col.as_string(i))
            .collect()
    };
    let mut doi = Vec::new();
    let mut raw_url = Vec::new();
    let mut canonical = Vec::new();
    let mut category = Vec::new();
    let mut liveness = Vec::new();
    let mut hint = Vec::new();
    let mut checked_at = Vec::new();
    for l in links {
        if !retained.contains(&l.doi) {
            report.violations.push(Violation {
                rule: "referential-integrity".into(),
                severity: Severity::Error,
                message: format!("link row for unknown doi {} dropped", l.doi),
            });
            continue;
        }
        doi.push(Some(l.doi.clone()));
        raw_url.push(Some(l.raw_url.clone()));
        canonical.push(Some(l.canonical_url.clone()));
        category.push(Some(l.host_category.as_str().to_string()));
        liveness.push(Some(l.liveness.as_str().to_string()));
        hint.push(Some(l.content_kind_hint.as_str().to_string()));
        checked_at.push(l.checked_at.clone());
    }
    let mut t = Table::new();
    t.push_column("doi", Column::Str(doi))?;
    t.push_column("raw_url", Column::Str(raw_url))?;
    t.push_column("canonical_url", Column::Str(canonical))?;
    t.push_column("host_category", Column::Str(category))?;
    t.push_column("liveness", Column::Str(liveness))?;
    t.push_column("content_kind_hint", Column::Str(hint))?;
    t.push_column("checked_at", Column::Str(checked_at))?;
    Ok(t)
}

/// Re-check an assembled set of tables: DOI uniqueness, referential
/// integrity, and flag-link coherence.
pub fn integrity_check(tables: &AnalysisTables) -> Result<IntegrityReport> {
    let mut report = IntegrityReport::default();
    let doi_col = tables.paper_table.column("doi")?;
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..tables.paper_table.n_rows() {
        let doi = doi_col.as_string(i).unwrap_or_default();
        if !seen.insert(doi.clone()) {
            report.violations.push(Violation {
                rule: "doi-unique".into(),
                severity: Severity::Error,
                message: format!("duplicate doi {doi} in paper table"),
            });
        }
    }

    for (table, name) in [
        (&tables.artifact_table, "artifact"),
        (&tables.link_table, "link"),
    ] {
        if table.n_rows() == 0 {
            continue;
        }
        let col = table.column("doi")?;
        for i in 0..table.n_rows() {
            let doi = col.as_string(i).unwrap_or_default();
            if !seen.contains(&doi) {
                report.violations.push(Violation {
                    rule: "referential-integrity".into(),
                    severity: Severity::Error,
                    message: format!("{name} row {i} references unknown doi {doi}"),
                });
            }
        }
    }

    // flag-link coherence over the assembled paper table
    let code_col = tables.paper_table.column("code_availability")?;
    let n_code = tables.paper_table.column("n_code_links")?;
    for i in 0..tables.paper_table.n_rows() {
        if code_col.as_string(i).as_deref() == Some("CA")
            && n_code.as_f64(i).unwrap_or(0.0) == 0.0
        {
            report.violations.push(Violation {
                rule: "flag-link-coherence".into(),
                severity: Severity::Warning,
                message: format!(
                    "doi {} classified CA with zero recorded code links",
                    doi_col.as_string(i).unwrap_or_default()
                ),
            });
        }
    }
    Ok(report)
}

/// Taxonomy partition counts over the paper table.
pub fn taxonomy_counts(paper_table: &Table) -> Result<BTreeMap<String, usize>> {
    let col = paper_table.column("data_availability")?;
    let mut counts: BTreeMap<String, usize> = DataAvailability::all()
        .iter()
        .map(|d| (d.as_str().to_string(), 0))
        .collect();
    for i in 0..paper_table.n_rows() {
        if let Some(v) = col.as_string(i) {
            *counts.entry(v).or_insert(0) += 1;
        }
    }
    Ok(counts)
}
