//! Availability-feature extraction through a pluggable language-model
//! provider: prompt building, response validation, caching, retries with
//! backoff, fragment merging, and the text-search baseline.

pub mod baseline;
pub mod cache;
pub mod provider;
pub mod templates;
pub mod validate;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ArticleRecord;
pub use baseline::baseline_text_search;
pub use cache::ResponseCache;
pub use provider::{CallKey, HttpProvider, Provider, ProviderRequest, ProviderResponse, RateLimiter, StubProvider};
pub use templates::{build_prompt, template, Template, TemplateId, TEMPLATE_VERSION};
pub use validate::{validate_response, FeatureFragment};

/// Who produced a feature set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Llm,
    Baseline,
    Human,
}

/// Per-paper availability features with verbatim justification quotes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureExtraction {
    pub doi: String,
    pub is_quantitative_study: Option<bool>,
    pub is_code_used: Option<bool>,
    pub is_code_publicly_available: Option<bool>,
    pub is_data_used: Option<bool>,
    pub is_simulation_study: Option<bool>,
    pub is_data_cited: Option<bool>,
    pub is_data_repository_available: Option<bool>,
    pub availability_statement_present: Option<bool>,
    pub code_links: Vec<String>,
    pub data_links: Vec<String>,
    pub justification_quotes: BTreeMap<String, String>,
    pub source: Source,
    /// Templates whose extraction failed after the retry budget.
    pub incomplete_templates: Vec<String>,
    /// Validator warnings and cross-field inconsistencies.
    pub flags: Vec<String>,
    /// Retries spent per template (0 when the first call succeeded).
    pub retries: BTreeMap<String, u32>,
}

impl FeatureExtraction {
    pub fn new(doi: &str, source: Source) -> Self {
        Self {
            doi: doi.to_string(),
            is_quantitative_study: None,
            is_code_used: None,
            is_code_publicly_available: None,
            is_data_used: None,
            is_simulation_study: None,
            is_data_cited: None,
            is_data_repository_available: None,
            availability_statement_present: None,
            code_links: Vec::new(),
            data_links: Vec::new(),
            justification_quotes: BTreeMap::new(),
            source,
            incomplete_templates: Vec::new(),
            flags: Vec::new(),
            retries: BTreeMap::new(),
        }
    }

    fn set_bool(&mut self, name: &str, value: bool) {
        match name {
            "is_quantitative_study" => self.is_quantitative_study = Some(value),
            "is_code_used" => self.is_code_used = Some(value),
            "is_code_publicly_available" => self.is_code_publicly_available = Some(value),
            "is_data_used" => self.is_data_used = Some(value),
            "is_simulation_study" => self.is_simulation_study = Some(value),
            "is_data_cited" => self.is_data_cited = Some(value),
            "is_data_repository_available" => self.is_data_repository_available = Some(value),
            "availability_statement_present" => {
                self.availability_statement_present = Some(value)
            }
            other => self.flags.push(format!("unmapped boolean field {other}")),
        }
    }

    /// The monotone implication between code flags; violations are flagged,
    /// not silently repaired.
    fn check_consistency(&mut self) {
        if self.is_code_publicly_available == Some(true) && self.is_code_used == Some(false) {
            self.flags
                .push("inconsistent: code publicly available but code not used".into());
        }
    }

    /// Check that every nonempty quote is a verbatim substring of the body.
    fn check_quotes(&mut self, record: &ArticleRecord) {
        let text = record.full_text();
        let bad: Vec<String> = self
            .justification_quotes
            .iter()
            .filter(|(_, q)| !q.is_empty() && !text.contains(q.as_str()))
            .map(|(k, _)| k.clone())
            .collect();
        for key in bad {
            self.flags.push(format!("quote for {key} is not verbatim"));
        }
    }
}

/// Extraction tuning: retry budget and backoff schedule for schema errors
/// and transport failures, model id and temperature for the cache key.
#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub retries: u32,
    pub backoff: Vec<Duration>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            model_id: "stub".into(),
            temperature: 0.0,
            max_tokens: 8192,
            retries: 2,
            backoff: vec![Duration::from_secs(1), Duration::from_secs(4)],
        }
    }
}

impl ExtractOptions {
    /// No sleeping between retries; used by tests.
    pub fn without_backoff(mut self) -> Self {
        self.backoff.clear();
        self
    }
}

/// Extract all feature groups for one article. Each template is answered
/// from the cache when possible; otherwise the provider is called with up to
/// `retries` retries on schema errors or transport failures. A template that
/// still fails leaves its fields missing and is listed as incomplete.
pub fn extract_features(
    record: &ArticleRecord,
    provider: &dyn Provider,
    cache: &ResponseCache,
    options: &ExtractOptions,
) -> Result<FeatureExtraction> {
    let mut features = FeatureExtraction::new(&record.doi, Source::Llm);
    for id in TemplateId::all() {
        let tpl = template(id);
        match obtain_fragment(record, &tpl, provider, cache, options, &mut features) {
            Ok(fragment) => merge_fragment(&mut features, &tpl, fragment),
            Err(_) => features.incomplete_templates.push(id.to_string()),
        }
    }
    features.check_consistency();
    features.check_quotes(record);
    Ok(features)
}

fn obtain_fragment(
    record: &ArticleRecord,
    tpl: &Template,
    provider: &dyn Provider,
    cache: &ResponseCache,
    options: &ExtractOptions,
    features: &mut FeatureExtraction,
) -> Result<FeatureFragment> {
    if let Some(text) = cache.lookup(&record.doi, tpl, &options.model_id, options.temperature) {
        features.retries.insert(tpl.id.to_string(), 0);
        return validate_response(&text, tpl);
    }
    let prompt = build_prompt(record, tpl.id)?;
    let request = ProviderRequest {
        prompt,
        model_id: options.model_id.clone(),
        temperature: options.temperature,
        max_tokens: options.max_tokens,
    };
    let key = CallKey {
        doi: record.doi.clone(),
        template: tpl.id.to_string(),
    };
    let mut retries_used = 0;
    let mut last_err = None;
    for attempt in 0..=options.retries {
        if attempt > 0 {
            retries_used = attempt;
            if let Some(delay) = options.backoff.get(attempt as usize - 1) {
                std::thread::sleep(*delay);
            }
        }
        match provider.complete(&key, &request) {
            Ok(response) => match validate_response(&response.text, tpl) {
                Ok(fragment) => {
                    cache.store(
                        &record.doi,
                        tpl,
                        &options.model_id,
                        options.temperature,
                        &response.text,
                    )?;
                    features.retries.insert(tpl.id.to_string(), retries_used);
                    return Ok(fragment);
                }
                Err(e) => last_err = Some(e),
            },
            Err(e) => last_err = Some(e),
        }
    }
    features.retries.insert(tpl.id.to_string(), retries_used);
    Err(last_err.unwrap_or_else(|| Error::Provider("no attempt made".into())))
}

fn merge_fragment(features: &mut FeatureExtraction, tpl: &Template, fragment: FeatureFragment) {
    for (name, value) in fragment.bools {
        features.set_bool(&name, value);
    }
    for (name, quote) in fragment.quotes {
        features.justification_quotes.insert(name, quote);
    }
    for (name, links) in fragment.links {
        match name.as_str() {
            "code_links" => features.code_links.extend(links),
            "data_links" => features.data_links.extend(links),
            other => features.flags.push(format!("unmapped link field {other}")),
        }
    }
    for warning in fragment.warnings {
        features.flags.push(format!("{}: {warning}", tpl.id));
    }
}

/// Extract features for a whole corpus in order, optionally rate-limited.
pub fn extract_corpus(
    records: &[ArticleRecord],
    provider: &dyn Provider,
    cache: &ResponseCache,
    options: &ExtractOptions,
    limiter: Option<&RateLimiter>,
) -> Result<Vec<FeatureExtraction>> {
    records
        .iter()
        .map(|r| {
            if let Some(l) = limiter {
                l.acquire();
            }
            extract_features(r, provider, cache, options)
        })
        .collect()
}

/// Write features as JSON Lines in corpus order.
pub fn write_features_jsonl(features: &[FeatureExtraction], path: &Path) -> Result<()> {
    let mut buf = String::new();
    for f in features {
        buf.push_str(
            &serde_json::to_string(f).map_err(|e| Error::InvalidInput(format!("serialize: {e}")))?,
        );
        buf.push('\n');
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_features_jsonl(path: &Path) -> Result<Vec<FeatureExtraction>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| Error::InvalidInput(format!("features parse: {e}")))
        })
        .collect()
}
