//! Pearson chi-square test of independence on a contingency table of counts.

use crate::error::{Error, Result};
use crate::stats::special::chi2_sf;

#[derive(Debug, Clone, Copy)]
pub struct Chi2Result {
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
}

/// Pearson chi-square statistic, df = (r-1)(c-1), p from the chi-square
/// survival function. Errors on ragged input or a zero expected count
/// (collapse sparse categories first).
pub fn chi_square_independence(table: &[Vec<f64>]) -> Result<Chi2Result> {
    let r = table.len();
    if r == 0 || table[0].is_empty() {
        return Err(Error::InvalidInput("empty contingency table".into()));
    }
    let c = table[0].len();
    if table.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidInput("ragged contingency table".into()));
    }
    if table.iter().flatten().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidInput("negative or non-finite count".into()));
    }
    let row_tot: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_tot: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    let grand: f64 = row_tot.iter().sum();

    let mut statistic = 0.0;
    for i in 0..r {
        for j in 0..c {
            let expected = row_tot[i] * col_tot[j] / grand;
            if expected <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "expected count is zero at cell ({i}, {j}); collapse sparse categories"
                )));
            }
            let d = table[i][j] - expected;
            statistic += d * d / expected;
        }
    }
    let df = (r - 1) * (c - 1);
    let p = if df == 0 { 1.0 } else { chi2_sf(statistic, df as f64) };
    Ok(Chi2Result { statistic, df, p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportional_table_gives_zero() {
        let t = vec![vec![10.0, 20.0], vec![30.0, 60.0]];
        let r = chi_square_independence(&t).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p - 1.0).abs() < 1e-12);
        assert_eq!(r.df, 1);
    }

    #[test]
    fn hand_counted_two_by_two() {
        // [[10,20],[20,10]]: expected 15 everywhere, statistic 4*25/15 = 20/3
        let t = vec![vec![10.0, 20.0], vec![20.0, 10.0]];
        let r = chi_square_independence(&t).unwrap();
        assert!((r.statistic - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.df, 1);
        assert!((r.p - 9.823_274_507_519_235e-3).abs() < 1e-12);
    }

    #[test]
    fn code_share_enrichment_fixture() {
        // topic-vs-rest code availability counts summed from the descriptive table
        let t = vec![vec![142.0, 772.0], vec![386.0, 9180.0]];
        let r = chi_square_independence(&t).unwrap();
        assert!((r.statistic - 230.655_231_524_106_82).abs() < 1e-8);
        assert!(r.p < 0.001);
    }

    #[test]
    fn invariant_under_permutation() {
        let t = vec![vec![5.0, 9.0, 2.0], vec![11.0, 3.0, 7.0]];
        let base = chi_square_independence(&t).unwrap();
        // permute rows
        let rows = vec![t[1].clone(), t[0].clone()];
        let pr = chi_square_independence(&rows).unwrap();
        assert!((base.statistic - pr.statistic).abs() < 1e-12);
        // permute columns
        let cols: Vec<Vec<f64>> = t.iter().map(|r| vec![r[2], r[0], r[1]]).collect();
        let pc = chi_square_independence(&cols).unwrap();
        assert!((base.statistic - pc.statistic).abs() < 1e-12);
        assert!((base.p - pc.p).abs() < 1e-12);
    }

    #[test]
    fn zero_expected_cell_is_an_error() {
        let t = vec![vec![0.0, 0.0], vec![5.0, 5.0]];
        let err = chi_square_independence(&t).unwrap_err();
        assert!(err.to_string().contains("collapse"));
    }
}
