//! Design-matrix construction from a paper table and a model spec.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::spec::{ModelSpec, Transform};
use crate::table::Table;
#[cfg(test)]
use crate::table::Column;

/// Covariate matrix plus outcome, ready for estimation. The first column is
/// always the constant term backing the alternative-specific constants.
#[derive(Debug, Clone)]
pub struct Design {
    /// Column names, `const` first.
    pub columns: Vec<String>,
    /// Non-reference alternatives each column is attached to.
    pub attachments: Vec<Vec<String>>,
    /// Row-major covariate values, n_obs x columns.len().
    pub rows: Vec<Vec<f64>>,
    /// Outcome as an index into `spec.alternatives`.
    pub outcome: Vec<usize>,
    pub alternatives: Vec<String>,
    pub reference: String,
}

impl Design {
    pub fn n_obs(&self) -> usize {
        self.rows.len()
    }
}

/// Build the design matrix and outcome vector.
///
/// Numeric terms are centered on the estimation-sample mean when requested
/// (missing values become 0 afterwards, to be absorbed by a paired
/// missing-indicator term); categoricals are one-hot encoded with the most
/// frequent level dropped; `combine` ORs binary variables into one column.
pub fn build_design(table: &Table, spec: &ModelSpec) -> Result<Design> {
    let table = apply_filter(table, spec)?;
    let n = table.n_rows();
    if n == 0 {
        return Err(Error::InvalidInput("empty estimation sample".into()));
    }

    let outcome_col = table.column(&spec.outcome)?;
    let mut outcome = Vec::with_capacity(n);
    for i in 0..n {
        let v = outcome_col.as_string(i).ok_or_else(|| {
            Error::InvalidInput(format!("outcome {} missing at row {i}", spec.outcome))
        })?;
        let idx = spec
            .alternatives
            .iter()
            .position(|a| *a == v)
            .ok_or_else(|| {
                Error::InvalidInput(format!("outcome value {v} not in alternatives"))
            })?;
        outcome.push(idx);
    }

    let non_ref: Vec<String> = spec.non_reference().iter().map(|s| s.to_string()).collect();
    let mut columns: Vec<String> = vec!["const".to_string()];
    let mut attachments: Vec<Vec<String>> = vec![non_ref.clone()];
    let mut data: Vec<Vec<f64>> = vec![vec![1.0; n]];

    for term in &spec.terms {
        let attach = if term.alternatives.is_empty() {
            non_ref.clone()
        } else {
            term.alternatives.clone()
        };
        match &term.transform {
            Transform::Identity | Transform::Center => {
                let var = term.variable.as_ref().unwrap();
                let col = table.column(var)?;
                let vals: Vec<Option<f64>> = (0..n).map(|i| col.as_f64(i)).collect();
                let observed: Vec<f64> = vals.iter().flatten().copied().collect();
                if observed.is_empty() {
                    return Err(Error::InvalidInput(format!(
                        "variable {var} is missing for every row"
                    )));
                }
                let shift = if term.transform == Transform::Center {
                    observed.iter().sum::<f64>() / observed.len() as f64
                } else {
                    0.0
                };
                let filled: Vec<f64> =
                    vals.iter().map(|v| v.map(|x| x - shift).unwrap_or(0.0)).collect();
                push_column(&mut columns, &mut attachments, &mut data, &term.name, attach, filled)?;
            }
            Transform::MissingIndicator => {
                let var = term.variable.as_ref().unwrap();
                let col = table.column(var)?;
                let filled: Vec<f64> = (0..n)
                    .map(|i| if col.is_missing(i) { 1.0 } else { 0.0 })
                    .collect();
                push_column(&mut columns, &mut attachments, &mut data, &term.name, attach, filled)?;
            }
            Transform::Combine => {
                let mut filled = vec![0.0; n];
                for var in &term.variables {
                    let col = table.column(var)?;
                    for (i, slot) in filled.iter_mut().enumerate() {
                        if col.as_f64(i).unwrap_or(0.0) != 0.0 {
                            *slot = 1.0;
                        }
                    }
                }
                push_column(&mut columns, &mut attachments, &mut data, &term.name, attach, filled)?;
            }
            Transform::OneHot => {
                let var = term.variable.as_ref().unwrap();
                let col = table.column(var)?;
                let mut levels: BTreeMap<String, usize> = BTreeMap::new();
                let mut values: Vec<String> = Vec::with_capacity(n);
                for i in 0..n {
                    let v = col.as_string(i).ok_or_else(|| {
                        Error::InvalidInput(format!("categorical {var} missing at row {i}"))
                    })?;
                    *levels.entry(v.clone()).or_insert(0) += 1;
                    values.push(v);
                }
                // drop the most frequent level; ties resolve to the first name
                let dropped = levels
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                    .map(|(k, _)| k.clone())
                    .unwrap();
                for level in levels.keys().filter(|l| **l != dropped) {
                    let filled: Vec<f64> = values
                        .iter()
                        .map(|v| if v == level { 1.0 } else { 0.0 })
                        .collect();
                    let name = format!("{}_{}", term.name, sanitize(level));
                    push_column(
                        &mut columns,
                        &mut attachments,
                        &mut data,
                        &name,
                        attach.clone(),
                        filled,
                    )?;
                }
            }
        }
    }

    // transpose into rows
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| data.iter().map(|c| c[i]).collect())
        .collect();
    Ok(Design {
        columns,
        attachments,
        rows,
        outcome,
        alternatives: spec.alternatives.clone(),
        reference: spec.reference.clone(),
    })
}

fn apply_filter(table: &Table, spec: &ModelSpec) -> Result<Table> {
    match &spec.filter {
        None => Ok(table.clone()),
        Some(col) => {
            let c = table.column(col)?;
            let mask: Vec<bool> = (0..table.n_rows())
                .map(|i| c.as_f64(i).unwrap_or(0.0) != 0.0)
                .collect();
            Ok(table.filter(&mask))
        }
    }
}

fn push_column(
    columns: &mut Vec<String>,
    attachments: &mut Vec<Vec<String>>,
    data: &mut Vec<Vec<f64>>,
    name: &str,
    attach: Vec<String>,
    filled: Vec<f64>,
) -> Result<()> {
    let first = filled[0];
    if filled.iter().all(|&v| v == first) {
        return Err(Error::InvalidInput(format!(
            "column {name} is constant after encoding"
        )));
    }
    if columns.iter().any(|c| c == name) {
        return Err(Error::InvalidInput(format!("duplicate design column {name}")));
    }
    columns.push(name.to_string());
    attachments.push(attach);
    data.push(filled);
    Ok(())
}

fn sanitize(level: &str) -> String {
    level
        .chars()
        .map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Convenience: design for a binary 0/1 outcome without a spec file.
pub fn binary_outcome(table: &Table, column: &str) -> Result<Vec<bool>> {
    let col = table.column(column)?;
    (0..table.n_rows())
        .map(|i| {
            col.as_f64(i)
                .map(|v| v != 0.0)
                .ok_or_else(|| Error::InvalidInput(format!("outcome {column} missing at row {i}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec::ModelSpec;

    fn toy_table() -> Table {
        let mut t = Table::new();
        t.push_column(
            "y",
            Column::Str(vec![
                Some("CU".into()),
                Some("CA".into()),
                Some("CU".into()),
            ]),
        )
        .unwrap();
        t.push_column("x", Column::Num(vec![Some(1.0), Some(2.0), Some(3.0)]))
            .unwrap();
        t.push_column(
            "cat",
            Column::Str(vec![Some("A".into()), Some("A".into()), Some("B".into())]),
        )
        .unwrap();
        t.push_column(
            "review_time",
            Column::Num(vec![Some(60.0), None, Some(90.0)]),
        )
        .unwrap();
        t.push_column("b1", Column::Bool(vec![Some(true), Some(false), Some(false)]))
            .unwrap();
        t.push_column("b2", Column::Bool(vec![Some(false), Some(false), Some(true)]))
            .unwrap();
        t
    }

    fn spec(toml_text: &str) -> ModelSpec {
        ModelSpec::from_toml(toml_text).unwrap()
    }

    #[test]
    fn centering_shifts_by_mean() {
        let s = spec(
            r#"
outcome = "y"
alternatives = ["CU", "CA"]
reference = "CU"

[[term]]
name = "x"
variable = "x"
transform = "center"
"#,
        );
        let d = build_design(&toy_table(), &s).unwrap();
        assert_eq!(d.columns, vec!["const", "x"]);
        let xs: Vec<f64> = d.rows.iter().map(|r| r[1]).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
        assert_eq!(d.outcome, vec![0, 1, 0]);
    }

    #[test]
    fn one_hot_drops_most_frequent() {
        let s = spec(
            r#"
outcome = "y"
alternatives = ["CU", "CA"]
reference = "CU"

[[term]]
name = "cat"
variable = "cat"
transform = "one-hot"
"#,
        );
        let d = build_design(&toy_table(), &s).unwrap();
        assert_eq!(d.columns, vec!["const", "cat_b"]);
        let col: Vec<f64> = d.rows.iter().map(|r| r[1]).collect();
        assert_eq!(col, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn missing_numeric_centered_with_indicator() {
        let s = spec(
            r#"
outcome = "y"
alternatives = ["CU", "CA"]
reference = "CU"

[[term]]
name = "review_time"
variable = "review_time"
transform = "center"

[[term]]
name = "review_time_missing"
variable = "review_time"
transform = "missing-indicator"
"#,
        );
        let d = build_design(&toy_table(), &s).unwrap();
        // observed mean 75: values [-15, 0, 15], indicator [0, 1, 0]
        let vals: Vec<f64> = d.rows.iter().map(|r| r[1]).collect();
        let ind: Vec<f64> = d.rows.iter().map(|r| r[2]).collect();
        assert_eq!(vals, vec![-15.0, 0.0, 15.0]);
        assert_eq!(ind, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn combine_ors_binaries() {
        let s = spec(
            r#"
outcome = "y"
alternatives = ["CU", "CA"]
reference = "CU"

[[term]]
name = "either"
transform = "combine"
variables = ["b1", "b2"]
"#,
        );
        let d = build_design(&toy_table(), &s).unwrap();
        let col: Vec<f64> = d.rows.iter().map(|r| r[1]).collect();
        assert_eq!(col, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_column_is_an_error() {
        let mut t = toy_table();
        t.push_column("same", Column::Num(vec![Some(2.0), Some(2.0), Some(2.0)]))
            .unwrap();
        let s = spec(
            r#"
outcome = "y"
alternatives = ["CU", "CA"]
reference = "CU"

[[term]]
name = "same"
variable = "same"
transform = "identity"
"#,
        );
        let err = build_design(&t, &s).unwrap_err();
        assert!(err.to_string().contains("same"));
    }

    #[test]
    fn all_missing_is_an_error() {
        let mut t = toy_table();
        t.push_column("gone", Column::Num(vec![None, None, None])).unwrap();
        let s = spec(
            r#"
outcome = "y"
alternatives = ["CU", "CA"]
reference = "CU"

[[term]]
name = "gone"
variable = "gone"
transform = "center"
"#,
        );
        assert!(build_design(&t, &s).is_err());
    }
}
