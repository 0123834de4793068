//! Host-category classification driven by the bundled, versioned rule table.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use url::Url;

/// Destination category of a link. Total: every URL gets exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostCategory {
    CodeHost,
    OpenRepoDoi,
    GovOpenData,
    UniversityRepo,
    BenchmarkHub,
    NgoNonprofit,
    OtherWeb,
}

impl HostCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            HostCategory::CodeHost => "code_host",
            HostCategory::OpenRepoDoi => "open_repo_doi",
            HostCategory::GovOpenData => "gov_open_data",
            HostCategory::UniversityRepo => "university_repo",
            HostCategory::BenchmarkHub => "benchmark_hub",
            HostCategory::NgoNonprofit => "ngo_nonprofit",
            HostCategory::OtherWeb => "other_web",
        }
    }

    /// Column name in the aggregated per-paper counts.
    pub fn count_column(&self) -> &'static str {
        match self {
            HostCategory::CodeHost => "n_src_code_host",
            HostCategory::OpenRepoDoi => "n_src_open_repo_doi",
            HostCategory::GovOpenData => "n_src_gov_open_data",
            HostCategory::UniversityRepo => "n_src_university_repo",
            HostCategory::BenchmarkHub => "n_src_benchmark_hub",
            HostCategory::NgoNonprofit => "n_src_ngo_nonprofit_org",
            HostCategory::OtherWeb => "n_src_other_web",
        }
    }

    pub fn all() -> [HostCategory; 7] {
        [
            HostCategory::CodeHost,
            HostCategory::OpenRepoDoi,
            HostCategory::GovOpenData,
            HostCategory::UniversityRepo,
            HostCategory::BenchmarkHub,
            HostCategory::NgoNonprofit,
            HostCategory::OtherWeb,
        ]
    }
}

impl std::fmt::Display for HostCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Deserialize)]
struct RuleFile {
    #[allow(dead_code)]
    version: u32,
    #[serde(rename = "rule")]
    rules: Vec<Rule>,
}

#[derive(Debug, Deserialize)]
struct Rule {
    category: String,
    #[serde(default)]
    hosts: Vec<String>,
    #[serde(default)]
    host_suffixes: Vec<String>,
    #[serde(default)]
    path_contains: Vec<String>,
}

const RULES_TOML: &str = include_str!("../../resources/host_rules.toml");

fn rules() -> &'static Vec<(HostCategory, Rule)> {
    static RULES: OnceLock<Vec<(HostCategory, Rule)>> = OnceLock::new();
    RULES.get_or_init(|| {
        let file: RuleFile = toml::from_str(RULES_TOML).expect("bundled host rules parse");
        file.rules
            .into_iter()
            .map(|r| {
                let cat = match r.category.as_str() {
                    "code_host" => HostCategory::CodeHost,
                    "open_repo_doi" => HostCategory::OpenRepoDoi,
                    "gov_open_data" => HostCategory::GovOpenData,
                    "university_repo" => HostCategory::UniversityRepo,
                    "benchmark_hub" => HostCategory::BenchmarkHub,
                    "ngo_nonprofit" => HostCategory::NgoNonprofit,
                    other => panic!("unknown category in bundled rules: {other}"),
                };
                (cat, r)
            })
            .collect()
    })
}

fn domain_match(host: &str, entry: &str) -> bool {
    host == entry || host.ends_with(&format!(".{entry}"))
}

fn rule_matches(rule: &Rule, host: &str, path: &str) -> bool {
    let host_hit = rule.hosts.iter().any(|h| domain_match(host, h))
        || rule.host_suffixes.iter().any(|s| host.ends_with(s.as_str()));
    if !host_hit {
        return false;
    }
    if rule.path_contains.is_empty() {
        return true;
    }
    let path = path.to_ascii_lowercase();
    rule.path_contains.iter().any(|p| path.contains(p))
}

/// True when the host matches any rule by host alone (path requirements
/// ignored). Canonization forces https for such hosts.
pub fn host_known(host: &str) -> bool {
    rules().iter().any(|(_, r)| {
        r.hosts.iter().any(|h| domain_match(host, h))
            || r.host_suffixes.iter().any(|s| host.ends_with(s.as_str()))
    })
}

/// First-match classification; anything unmatched is `other_web`.
pub fn classify_host(url: &str) -> HostCategory {
    let parsed = match Url::parse(url) {
        Ok(u) => u,
        Err(_) => return HostCategory::OtherWeb,
    };
    let host = match parsed.host_str() {
        Some(h) => h.to_ascii_lowercase(),
        None => return HostCategory::OtherWeb,
    };
    for (cat, rule) in rules() {
        if rule_matches(rule, &host, parsed.path()) {
            return *cat;
        }
    }
    HostCategory::OtherWeb
}
