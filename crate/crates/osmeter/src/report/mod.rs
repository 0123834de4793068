//! Descriptive tables, bivariate test battery, citation series, and report
//! emission.

pub mod citations;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::chi2::{chi_square_independence, Chi2Result};
use crate::stats::welch::{welch_t_test, SampleSummary, WelchResult};
use crate::table::Table;
pub use citations::{
    citation_series, fetch_citations, CitationCache, CitationClient, CitationSeries,
    CountingClient, FixtureCitationClient,
};

/// Mean/SD rows for numeric variables and count/percent rows for
/// categorical ones, per availability group.
#[derive(Debug, Clone, Serialize)]
pub struct DescriptiveTable {
    pub group_by: String,
    pub groups: Vec<String>,
    pub group_sizes: Vec<usize>,
    pub numeric: Vec<NumericRow>,
    pub categorical: Vec<CategoricalRow>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericRow {
    pub variable: String,
    /// (mean, sd, n non-missing) per group, aligned with `groups`.
    pub per_group: Vec<(f64, f64, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CategoricalRow {
    pub variable: String,
    pub level: String,
    /// (count, percent) per group, aligned with `groups`.
    pub per_group: Vec<(usize, f64)>,
}

/// Group rows by `group_by` and summarize the named variables.
pub fn descriptive_table(
    table: &Table,
    group_by: &str,
    numeric_vars: &[String],
    categorical_vars: &[String],
) -> Result<DescriptiveTable> {
    let group_col = table.column(group_by)?;
    let mut groups: Vec<String> = Vec::new();
    let mut row_group: Vec<Option<usize>> = Vec::with_capacity(table.n_rows());
    for i in 0..table.n_rows() {
        match group_col.as_string(i) {
            Some(g) => {
                let idx = match groups.iter().position(|x| *x == g) {
                    Some(idx) => idx,
                    None => {
                        groups.push(g);
                        groups.len() - 1
                    }
                };
                row_group.push(Some(idx));
            }
            None => row_group.push(None),
        }
    }
    groups.sort();
    // re-map after sorting for a deterministic group order
    let mut row_group: Vec<Option<usize>> = {
        let col = table.column(group_by)?;
        (0..table.n_rows())
            .map(|i| col.as_string(i).and_then(|g| groups.iter().position(|x| *x == g)))
            .collect()
    };
    let _ = &mut row_group;

    let mut out = DescriptiveTable {
        group_by: group_by.to_string(),
        group_sizes: groups
            .iter()
            .enumerate()
            .map(|(gi, _)| row_group.iter().flatten().filter(|&&g| g == gi).count())
            .collect(),
        groups,
        numeric: Vec::new(),
        categorical: Vec::new(),
        warnings: Vec::new(),
    };
    for (gi, size) in out.group_sizes.iter().enumerate() {
        if *size == 0 {
            out.warnings.push(format!("group {} is empty", out.groups[gi]));
        }
    }

    for var in numeric_vars {
        let col = table.column(var)?;
        let mut per_group = Vec::new();
        for gi in 0..out.groups.len() {
            let xs: Vec<f64> = (0..table.n_rows())
                .filter(|&i| row_group[i] == Some(gi))
                .filter_map(|i| col.as_f64(i))
                .collect();
            let (mean, sd) = crate::stats::mean_sd(&xs);
            per_group.push((mean, sd, xs.len()));
        }
        out.numeric.push(NumericRow {
            variable: var.clone(),
            per_group,
        });
    }

    for var in categorical_vars {
        let col = table.column(var)?;
        let mut levels: Vec<String> = Vec::new();
        for i in 0..table.n_rows() {
            if let Some(v) = col.as_string(i) {
                if !levels.contains(&v) {
                    levels.push(v);
                }
            }
        }
        levels.sort();
        for level in levels {
            let mut per_group = Vec::new();
            for gi in 0..out.groups.len() {
                let count = (0..table.n_rows())
                    .filter(|&i| row_group[i] == Some(gi))
                    .filter(|&i| col.as_string(i).as_deref() == Some(level.as_str()))
                    .count();
                let denom = out.group_sizes[gi].max(1);
                per_group.push((count, 100.0 * count as f64 / denom as f64));
            }
            out.categorical.push(CategoricalRow {
                variable: var.clone(),
                level,
                per_group,
            });
        }
    }
    Ok(out)
}

/// One bivariate test result from the battery.
#[derive(Debug, Clone, Serialize)]
pub enum BivariateTest {
    Welch {
        variable: String,
        group_a: String,
        group_b: String,
        t: f64,
        df: f64,
        p: f64,
        ci95_lo: f64,
        ci95_hi: f64,
    },
    ChiSquare {
        variable: String,
        statistic: f64,
        df: usize,
        p: f64,
    },
    Skipped {
        variable: String,
        reason: String,
    },
}

/// Run Welch tests for numeric variables and chi-square independence tests
/// for categorical ones against a two-level grouping column.
pub fn bivariate_battery(
    table: &Table,
    group_by: &str,
    numeric_vars: &[String],
    categorical_vars: &[String],
) -> Result<Vec<BivariateTest>> {
    let desc = descriptive_table(table, group_by, numeric_vars, &[])?;
    let mut tests = Vec::new();
    if desc.groups.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "bivariate battery needs exactly 2 groups, found {}",
            desc.groups.len()
        )));
    }
    for row in &desc.numeric {
        let (m1, s1, n1) = row.per_group[0];
        let (m2, s2, n2) = row.per_group[1];
        if n1 < 2 || n2 < 2 {
            tests.push(BivariateTest::Skipped {
                variable: row.variable.clone(),
                reason: "fewer than 2 observations in a group".into(),
            });
            continue;
        }
        let r: WelchResult = welch_t_test(
            &SampleSummary::new(m1, s1, n1),
            &SampleSummary::new(m2, s2, n2),
        )?;
        tests.push(BivariateTest::Welch {
            variable: row.variable.clone(),
            group_a: desc.groups[0].clone(),
            group_b: desc.groups[1].clone(),
            t: r.t,
            df: r.df,
            p: r.p,
            ci95_lo: r.ci95.0,
            ci95_hi: r.ci95.1,
        });
    }

    let group_col = table.column(group_by)?;
    for var in categorical_vars {
        let col = table.column(var)?;
        let mut levels: Vec<String> = Vec::new();
        let mut cells: BTreeMap<(String, usize), f64> = BTreeMap::new();
        for i in 0..table.n_rows() {
            let (Some(level), Some(group)) = (col.as_string(i), group_col.as_string(i)) else {
                continue;
            };
            let gi = desc.groups.iter().position(|g| *g == group).unwrap_or(0);
            if !levels.contains(&level) {
                levels.push(level.clone());
            }
            *cells.entry((level, gi)).or_insert(0.0) += 1.0;
        }
        levels.sort();
        let matrix: Vec<Vec<f64>> = levels
            .iter()
            .map(|l| {
                (0..2)
                    .map(|gi| cells.get(&(l.clone(), gi)).copied().unwrap_or(0.0))
                    .collect()
            })
            .collect();
        match chi_square_independence(&matrix) {
            Ok(Chi2Result { statistic, df, p }) => tests.push(BivariateTest::ChiSquare {
                variable: var.clone(),
                statistic,
                df,
                p,
            }),
            Err(e) => tests.push(BivariateTest::Skipped {
                variable: var.clone(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(tests)
}

/// Write the descriptive table as CSV.
pub fn write_descriptive_csv(desc: &DescriptiveTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::InvalidInput(format!("csv {}: {e}", path.display())))?;
    let mut header = vec!["kind".to_string(), "variable".to_string(), "level".to_string()];
    for g in &desc.groups {
        header.push(format!("{g}_mean_or_count"));
        header.push(format!("{g}_sd_or_percent"));
    }
    w.write_record(&header)
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    for row in &desc.numeric {
        let mut rec = vec!["numeric".to_string(), row.variable.clone(), String::new()];
        for (mean, sd, _) in &row.per_group {
            rec.push(format!("{mean}"));
            rec.push(format!("{sd}"));
        }
        w.write_record(&rec)
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    for row in &desc.categorical {
        let mut rec = vec![
            "categorical".to_string(),
            row.variable.clone(),
            row.level.clone(),
        ];
        for (count, pct) in &row.per_group {
            rec.push(count.to_string());
            rec.push(format!("{pct}"));
        }
        w.write_record(&rec)
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_bivariate_csv(tests: &[BivariateTest], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::InvalidInput(format!("csv {}: {e}", path.display())))?;
    w.write_record(["test", "variable", "statistic", "df", "p", "ci95_lo", "ci95_hi", "note"])
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    for t in tests {
        let rec: Vec<String> = match t {
            BivariateTest::Welch {
                variable,
                t,
                df,
                p,
                ci95_lo,
                ci95_hi,
                ..
            } => vec![
                "welch".into(),
                variable.clone(),
                format!("{t}"),
                format!("{df}"),
                format!("{p}"),
                format!("{ci95_lo}"),
                format!("{ci95_hi}"),
                String::new(),
            ],
            BivariateTest::ChiSquare {
                variable,
                statistic,
                df,
                p,
            } => vec![
                "chi_square".into(),
                variable.clone(),
                format!("{statistic}"),
                df.to_string(),
                format!("{p}"),
                String::new(),
                String::new(),
                String::new(),
            ],
            BivariateTest::Skipped { variable, reason } => vec![
                "skipped".into(),
                variable.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                reason.clone(),
            ],
        };
        w.write_record(&rec)
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_citation_series_csv(series: &CitationSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::InvalidInput(format!("csv {}: {e}", path.display())))?;
    w.write_record(["year", "class", "n", "mean", "ci95_lo", "ci95_hi"])
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    for p in &series.aggregated {
        w.write_record([
            p.year.to_string(),
            p.class.clone(),
            p.n.to_string(),
            format!("{}", p.mean),
            format!("{}", p.lo),
            format!("{}", p.hi),
        ])
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    fn table() -> Table {
        let mut t = Table::new();
        t.push_column(
            "code_availability",
            Column::Str(
                ["CA", "CA", "CU", "CU", "CU", "CU"]
                    .iter()
                    .map(|s| Some(s.to_string()))
                    .collect(),
            ),
        )
        .unwrap();
        t.push_column(
            "n_figures",
            Column::Int(vec![Some(10), Some(12), Some(5), Some(7), Some(6), Some(8)]),
        )
        .unwrap();
        t.push_column(
            "journal",
            Column::Str(
                ["TR-C", "TR-C", "TR-D", "TR-D", "TR-C", "TR-D"]
                    .iter()
                    .map(|s| Some(s.to_string()))
                    .collect(),
            ),
        )
        .unwrap();
        t
    }

    #[test]
    fn hand_built_means_match() {
        let d = descriptive_table(
            &table(),
            "code_availability",
            &["n_figures".into()],
            &["journal".into()],
        )
        .unwrap();
        assert_eq!(d.groups, vec!["CA", "CU"]);
        assert_eq!(d.group_sizes, vec![2, 4]);
        let (mean_ca, sd_ca, n_ca) = d.numeric[0].per_group[0];
        assert_eq!(mean_ca, 11.0);
        assert!((sd_ca - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(n_ca, 2);
        let (mean_cu, _, _) = d.numeric[0].per_group[1];
        assert_eq!(mean_cu, 6.5);
        // percents per variable-group sum to 100
        let total_ca: f64 = d
            .categorical
            .iter()
            .filter(|r| r.variable == "journal")
            .map(|r| r.per_group[0].1)
            .sum();
        assert!((total_ca - 100.0).abs() < 1e-9);
    }

    #[test]
    fn single_group_block() {
        let mut t = Table::new();
        t.push_column(
            "g",
            Column::Str(vec![Some("only".into()), Some("only".into())]),
        )
        .unwrap();
        t.push_column("x", Column::Num(vec![Some(1.0), Some(3.0)])).unwrap();
        let d = descriptive_table(&t, "g", &["x".into()], &[]).unwrap();
        assert_eq!(d.groups.len(), 1);
        assert_eq!(d.numeric[0].per_group[0].0, 2.0);
    }

    #[test]
    fn battery_runs_both_tests() {
        let tests = bivariate_battery(
            &table(),
            "code_availability",
            &["n_figures".into()],
            &["journal".into()],
        )
        .unwrap();
        assert_eq!(tests.len(), 2);
        assert!(matches!(tests[0], BivariateTest::Welch { .. }));
        assert!(matches!(tests[1], BivariateTest::ChiSquare { .. }));
    }

    #[test]
    fn code_share_percentage_reproduced() {
        // 528 CA of 10,480 quantitative papers is just over 5%
        let share: f64 = 528.0 / 10480.0 * 100.0;
        assert!(share > 5.0 && share < 5.1);
        assert!((share - 5.038_167_938_931_297_5).abs() < 1e-9);
    }
}
