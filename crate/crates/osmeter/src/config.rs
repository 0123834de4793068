//! Run configuration for the `osmeter run` umbrella command.

use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub topics: TopicsSection,
    #[serde(default)]
    pub extract: ExtractSection,
    #[serde(default)]
    pub provider_live: LiveProviderSection,
    #[serde(default)]
    pub links: LinksSection,
    #[serde(default)]
    pub models: ModelsSection,
    #[serde(default)]
    pub report: ReportSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_provider")]
    pub provider: String,
    #[serde(default)]
    pub stub_fixtures: Option<PathBuf>,
    #[serde(default = "default_validation")]
    pub validation: String,
    /// Anchors paper age and citation rates; defaults to the run date.
    #[serde(default)]
    pub reference_date: Option<NaiveDate>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub citations: Option<PathBuf>,
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from("cache")
}

fn default_provider() -> String {
    "stub".into()
}

fn default_validation() -> String {
    "off".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopicsSection {
    pub k: usize,
    pub seed: u64,
    pub iterations: usize,
    /// 0 selects the 50/k heuristic.
    pub alpha: f64,
    pub beta: f64,
    pub top_words: usize,
}

impl Default for TopicsSection {
    fn default() -> Self {
        Self {
            k: 15,
            seed: 42,
            iterations: 1000,
            alpha: 0.0,
            beta: 0.01,
            top_words: 5,
        }
    }
}

impl TopicsSection {
    pub fn effective_alpha(&self) -> f64 {
        if self.alpha > 0.0 {
            self.alpha
        } else {
            50.0 / self.k as f64
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractSection {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub retries: u32,
    pub backoff_secs: Vec<u64>,
    /// 0 disables rate limiting.
    pub rate_limit_rpm: u32,
}

impl Default for ExtractSection {
    fn default() -> Self {
        Self {
            model_id: "stub".into(),
            temperature: 0.0,
            max_tokens: 8192,
            retries: 2,
            backoff_secs: vec![1, 4],
            rate_limit_rpm: 0,
        }
    }
}

impl ExtractSection {
    pub fn options(&self) -> crate::extract::ExtractOptions {
        crate::extract::ExtractOptions {
            model_id: self.model_id.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            retries: self.retries,
            backoff: self.backoff_secs.iter().map(|s| Duration::from_secs(*s)).collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiveProviderSection {
    pub endpoint: String,
    pub api_key_env: String,
    pub timeout_secs: u64,
}

impl Default for LiveProviderSection {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            api_key_env: "OSMETER_API_KEY".into(),
            timeout_secs: 60,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinksSection {
    pub timeout_secs: u64,
    pub retries: u32,
    pub per_host_concurrency: usize,
    pub global_concurrency: usize,
}

impl Default for LinksSection {
    fn default() -> Self {
        Self {
            timeout_secs: 10,
            retries: 2,
            per_host_concurrency: 2,
            global_concurrency: 16,
        }
    }
}

impl LinksSection {
    pub fn policy(&self) -> crate::links::ValidationPolicy {
        crate::links::ValidationPolicy {
            timeout: Duration::from_secs(self.timeout_secs),
            retries: self.retries,
            per_host_concurrency: self.per_host_concurrency,
            global_concurrency: self.global_concurrency,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsSection {
    pub specs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSection {
    pub group_by: String,
    pub numeric_vars: Vec<String>,
    pub categorical_vars: Vec<String>,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            group_by: "code_availability".into(),
            numeric_vars: vec![
                "paper_age_years".into(),
                "n_tables".into(),
                "n_figures".into(),
                "n_references".into(),
                "n_authors".into(),
                "review_time".into(),
                "n_pages".into(),
            ],
            categorical_vars: vec![
                "data_availability".into(),
                "open_access".into(),
                "journal".into(),
                "region_normalized".into(),
                "availability_statement_present".into(),
            ],
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&raw).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        config.validate()?;
        // paths are relative to the config file's directory
        if let Some(base) = path.parent() {
            config.anchor_paths(base);
        }
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        match self.run.provider.as_str() {
            "stub" => {
                if self.run.stub_fixtures.is_none() {
                    return Err(Error::Config(
                        "provider = \"stub\" requires run.stub_fixtures".into(),
                    ));
                }
            }
            "live" => {
                if self.provider_live.endpoint.is_empty() {
                    return Err(Error::Config(
                        "provider = \"live\" requires provider_live.endpoint".into(),
                    ));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown provider {other} (expected stub or live)"
                )))
            }
        }
        if !matches!(self.run.validation.as_str(), "on" | "off") {
            return Err(Error::Config(format!(
                "validation must be on or off, got {}",
                self.run.validation
            )));
        }
        if self.topics.k < 2 {
            return Err(Error::Config("topics.k must be >= 2".into()));
        }
        Ok(())
    }

    fn anchor_paths(&mut self, base: &Path) {
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        anchor(&mut self.run.corpus);
        anchor(&mut self.run.out_dir);
        anchor(&mut self.run.cache_dir);
        if let Some(p) = self.run.stub_fixtures.as_mut() {
            anchor(p);
        }
        if let Some(p) = self.run.labels.as_mut() {
            anchor(p);
        }
        if let Some(p) = self.run.citations.as_mut() {
            anchor(p);
        }
        for p in self.models.specs.iter_mut() {
            anchor(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let raw = r#"
[run]
corpus = "corpus.jsonl"
out_dir = "out"
stub_fixtures = "stub.json"
"#;
        let config: RunConfig = toml::from_str(raw).unwrap();
        config.validate().unwrap();
        assert_eq!(config.topics.k, 15);
        assert_eq!(config.extract.retries, 2);
        assert_eq!(config.links.timeout_secs, 10);
        assert!((config.topics.effective_alpha() - 50.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn stub_without_fixtures_is_a_config_error() {
        let raw = r#"
[run]
corpus = "c.jsonl"
out_dir = "out"
"#;
        let config: RunConfig = toml::from_str(raw).unwrap();
        let err = config.validate().unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        let raw = r#"
[run]
corpus = "c.jsonl"
out_dir = "out"
stub_fixtures = "s.json"
surprise = true
"#;
        assert!(toml::from_str::<RunConfig>(raw).is_err());
    }
}
