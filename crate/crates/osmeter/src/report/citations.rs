//! Citation counts: pluggable client (CSV fixture or live API), a small
//! timestamped cache, and the citations-per-year series by availability
//! class.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::table::Table;

pub trait CitationClient: Send + Sync {
    fn id(&self) -> &str;
    /// Citation count for a DOI; Ok(None) when the DOI is unknown.
    fn fetch(&self, doi: &str) -> Result<Option<u64>>;
}

/// Fixture client reading a `doi,citations` CSV.
pub struct FixtureCitationClient {
    map: BTreeMap<String, u64>,
}

impl FixtureCitationClient {
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::InvalidInput(format!("citations csv {}: {e}", path.display())))?;
        let mut map = BTreeMap::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::InvalidInput(format!("citations csv: {e}")))?;
            if rec.len() < 2 {
                continue;
            }
            let count: u64 = rec[1]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad citation count: {}", &rec[1])))?;
            map.insert(rec[0].to_string(), count);
        }
        Ok(Self { map })
    }
}

impl CitationClient for FixtureCitationClient {
    fn id(&self) -> &str {
        "fixture"
    }

    fn fetch(&self, doi: &str) -> Result<Option<u64>> {
        Ok(self.map.get(doi).copied())
    }
}

/// Client decorator counting outbound calls (cache-hit tests).
pub struct CountingClient<C: CitationClient> {
    inner: C,
    pub calls: AtomicUsize,
}

impl<C: CitationClient> CountingClient<C> {
    pub fn new(inner: C) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<C: CitationClient> CitationClient for CountingClient<C> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn fetch(&self, doi: &str) -> Result<Option<u64>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.fetch(doi)
    }
}

/// On-disk citation cache (`doi,count,fetched_at` CSV). A hit answers
/// without touching the client; a not-found is cached as missing.
pub struct CitationCache {
    path: PathBuf,
    entries: BTreeMap<String, (Option<u64>, String)>,
}

impl CitationCache {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries = BTreeMap::new();
        if path.exists() {
            let mut reader = csv::Reader::from_path(&path)
                .map_err(|e| Error::InvalidInput(format!("citation cache: {e}")))?;
            for rec in reader.records() {
                let rec = rec.map_err(|e| Error::InvalidInput(format!("citation cache: {e}")))?;
                if rec.len() < 3 {
                    continue;
                }
                let count = if rec[1].is_empty() {
                    None
                } else {
                    rec[1].parse::<u64>().ok()
                };
                entries.insert(rec[0].to_string(), (count, rec[2].to_string()));
            }
        }
        Ok(Self { path, entries })
    }

    fn persist(&self) -> Result<()> {
        let mut w = csv::Writer::from_path(&self.path)
            .map_err(|e| Error::InvalidInput(format!("citation cache: {e}")))?;
        w.write_record(["doi", "citations", "fetched_at"])
            .map_err(|e| Error::InvalidInput(format!("citation cache: {e}")))?;
        for (doi, (count, at)) in &self.entries {
            w.write_record([
                doi.as_str(),
                &count.map(|c| c.to_string()).unwrap_or_default(),
                at.as_str(),
            ])
            .map_err(|e| Error::InvalidInput(format!("citation cache: {e}")))?;
        }
        w.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(())
    }
}

/// Cached citation lookup: the client is consulted only on a cache miss;
/// a lookup that finds nothing is recorded as missing with a flag.
pub fn fetch_citations(
    doi: &str,
    client: &dyn CitationClient,
    cache: &mut CitationCache,
) -> Result<Option<u64>> {
    if let Some((count, _)) = cache.entries.get(doi) {
        return Ok(*count);
    }
    let count = client.fetch(doi)?;
    cache
        .entries
        .insert(doi.to_string(), (count, chrono::Utc::now().to_rfc3339()));
    cache.persist()?;
    Ok(count)
}

/// One paper's point in the citation series.
#[derive(Debug, Clone, Serialize)]
pub struct PaperCitationRate {
    pub doi: String,
    pub acceptance_year: i32,
    pub citations_per_year: f64,
    pub class: String,
}

/// Aggregated band per (acceptance year, class).
#[derive(Debug, Clone, Serialize)]
pub struct SeriesPoint {
    pub year: i32,
    pub class: String,
    pub n: usize,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CitationSeries {
    pub per_paper: Vec<PaperCitationRate>,
    pub aggregated: Vec<SeriesPoint>,
    /// Rows dropped for missing or too-recent acceptance dates.
    pub excluded: usize,
}

/// Citations per year since acceptance (fractional years), aggregated per
/// (acceptance year, availability class) with a 95% normal band. Papers
/// without an acceptance date, or accepted less than 30 days before the
/// reference date, are excluded and counted.
pub fn citation_series(
    paper_table: &Table,
    accepted_dates: &BTreeMap<String, NaiveDate>,
    citations: &BTreeMap<String, u64>,
    class_column: &str,
    reference_date: NaiveDate,
) -> Result<CitationSeries> {
    let doi_col = paper_table.column("doi")?;
    let class_col = paper_table.column(class_column)?;
    let mut series = CitationSeries::default();
    for i in 0..paper_table.n_rows() {
        let doi = match doi_col.as_string(i) {
            Some(d) => d,
            None => continue,
        };
        let class = class_col.as_string(i).unwrap_or_else(|| "unknown".into());
        let Some(accepted) = accepted_dates.get(&doi) else {
            series.excluded += 1;
            continue;
        };
        let days = (reference_date - *accepted).num_days();
        if days < 30 {
            series.excluded += 1;
            continue;
        }
        let Some(count) = citations.get(&doi) else {
            series.excluded += 1;
            continue;
        };
        let years = days as f64 / 365.25;
        series.per_paper.push(PaperCitationRate {
            doi,
            acceptance_year: accepted.format("%Y").to_string().parse().unwrap(),
            citations_per_year: *count as f64 / years,
            class,
        });
    }

    let mut groups: BTreeMap<(i32, String), Vec<f64>> = BTreeMap::new();
    for p in &series.per_paper {
        groups
            .entry((p.acceptance_year, p.class.clone()))
            .or_default()
            .push(p.citations_per_year);
    }
    for ((year, class), rates) in groups {
        let (mean, sd) = crate::stats::mean_sd(&rates);
        let half = if rates.len() > 1 {
            1.959_963_984_540_054 * sd / (rates.len() as f64).sqrt()
        } else {
            0.0
        };
        series.aggregated.push(SeriesPoint {
            year,
            class,
            n: rates.len(),
            mean,
            lo: mean - half,
            hi: mean + half,
        });
    }
    Ok(series)
}
