//! Declarative model specifications: outcome, alternatives, covariate terms
//! with transforms, per-alternative attachment, and equality restrictions.
//!
//! Specs are written as TOML files; see `ModelSpec::from_toml`.

use serde::Deserialize;

use crate::error::{Error, Result};

/// How a source variable enters the design matrix.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// Use the value as is (missing entries become 0).
    Identity,
    /// Subtract the mean over the estimation sample (missing entries become 0).
    Center,
    /// Expand a categorical into binaries, dropping the most frequent level.
    OneHot,
    /// 1 where the source variable is missing, else 0.
    MissingIndicator,
    /// OR a set of binary variables into one column.
    Combine,
}

/// One covariate term of the model.
#[derive(Debug, Clone, Deserialize)]
pub struct TermSpec {
    /// Output column name (prefix for one-hot expansions).
    pub name: String,
    /// Source variable in the paper table (unused for `combine`).
    #[serde(default)]
    pub variable: Option<String>,
    pub transform: Transform,
    /// Source variables for `combine`.
    #[serde(default)]
    pub variables: Vec<String>,
    /// Non-reference alternatives this term enters; empty means all of them.
    #[serde(default)]
    pub alternatives: Vec<String>,
}

/// A set of (design column, alternative) pairs sharing one coefficient.
#[derive(Debug, Clone, Deserialize)]
pub struct EqualitySet {
    #[serde(default)]
    pub name: Option<String>,
    /// Pairs [column, alternative].
    pub entries: Vec<(String, String)>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ModelSpec {
    /// Outcome column in the paper table.
    pub outcome: String,
    /// All alternatives, including the reference.
    pub alternatives: Vec<String>,
    /// Alternative whose utility is fixed to zero.
    pub reference: String,
    /// Optional boolean column restricting the estimation sample.
    #[serde(default)]
    pub filter: Option<String>,
    #[serde(default, rename = "term")]
    pub terms: Vec<TermSpec>,
    #[serde(default, rename = "equality")]
    pub equality: Vec<EqualitySet>,
}

impl ModelSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ModelSpec =
            toml::from_str(text).map_err(|e| Error::ModelSpec(format!("spec parse: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Intercept-only spec with the same outcome/alternatives.
    pub fn null_spec(&self) -> ModelSpec {
        ModelSpec {
            outcome: self.outcome.clone(),
            alternatives: self.alternatives.clone(),
            reference: self.reference.clone(),
            filter: self.filter.clone(),
            terms: Vec::new(),
            equality: Vec::new(),
        }
    }

    pub fn non_reference(&self) -> Vec<&str> {
        self.alternatives
            .iter()
            .filter(|a| **a != self.reference)
            .map(|s| s.as_str())
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.alternatives.len() < 2 {
            return Err(Error::ModelSpec("need at least 2 alternatives".into()));
        }
        if !self.alternatives.contains(&self.reference) {
            return Err(Error::ModelSpec(format!(
                "reference alternative {} not in alternatives",
                self.reference
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for alt in &self.alternatives {
            if !seen.insert(alt) {
                return Err(Error::ModelSpec(format!("duplicate alternative {alt}")));
            }
        }
        for term in &self.terms {
            match term.transform {
                Transform::Combine => {
                    if term.variables.is_empty() {
                        return Err(Error::ModelSpec(format!(
                            "term {}: combine needs variables",
                            term.name
                        )));
                    }
                }
                _ => {
                    if term.variable.is_none() {
                        return Err(Error::ModelSpec(format!(
                            "term {}: missing source variable",
                            term.name
                        )));
                    }
                }
            }
            for alt in &term.alternatives {
                if *alt == self.reference {
                    return Err(Error::ModelSpec(format!(
                        "term {} attached to the reference alternative",
                        term.name
                    )));
                }
                if !self.alternatives.contains(alt) {
                    return Err(Error::ModelSpec(format!(
                        "term {}: unknown alternative {alt}",
                        term.name
                    )));
                }
            }
        }
        for set in &self.equality {
            if set.entries.len() < 2 {
                return Err(Error::ModelSpec("equality set needs >= 2 entries".into()));
            }
            for (_, alt) in &set.entries {
                if *alt == self.reference {
                    return Err(Error::ModelSpec(
                        "equality restriction references the reference alternative".into(),
                    ));
                }
                if !self.alternatives.contains(alt) {
                    return Err(Error::ModelSpec(format!(
                        "equality restriction: unknown alternative {alt}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_spec() {
        let text = r#"
outcome = "data_availability"
alternatives = ["NC_NR", "C_NR", "NC_R", "C_R"]
reference = "NC_NR"
filter = "is_quantitative_study"

[[term]]
name = "num_fig"
variable = "n_figures"
transform = "center"

[[term]]
name = "journal"
variable = "journal"
transform = "one-hot"

[[term]]
name = "region_combo"
transform = "combine"
variables = ["is_region_europe", "is_region_oceania"]
alternatives = ["C_NR"]

[[term]]
name = "review_missing"
variable = "review_time"
transform = "missing-indicator"

[[equality]]
name = "num_fig_all"
entries = [["num_fig", "C_NR"], ["num_fig", "NC_R"], ["num_fig", "C_R"]]
"#;
        let spec = ModelSpec::from_toml(text).unwrap();
        assert_eq!(spec.terms.len(), 4);
        assert_eq!(spec.non_reference(), vec!["C_NR", "NC_R", "C_R"]);
        assert_eq!(spec.equality[0].entries.len(), 3);
    }

    #[test]
    fn rejects_equality_on_reference() {
        let text = r#"
outcome = "y"
alternatives = ["a", "b"]
reference = "a"

[[equality]]
entries = [["x", "a"], ["x", "b"]]
"#;
        let err = ModelSpec::from_toml(text).unwrap_err();
        assert!(err.to_string().contains("reference"));
    }

    #[test]
    fn rejects_term_on_reference() {
        let text = r#"
outcome = "y"
alternatives = ["a", "b"]
reference = "a"

[[term]]
name = "x"
variable = "x"
transform = "identity"
alternatives = ["a"]
"#;
        assert!(ModelSpec::from_toml(text).is_err());
    }
}
