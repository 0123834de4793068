//! Inter-rater agreement over rater-by-item boolean label matrices:
//! percentage agreement, Cohen's kappa, Fleiss's kappa, prevalence, and
//! Landis-Koch interpretation bands.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Rectangular boolean label grid: one row per item, one column per rater.
#[derive(Debug, Clone)]
pub struct LabelMatrix {
    items: Vec<String>,
    raters: Vec<String>,
    /// item-major: labels[i][r]
    labels: Vec<Vec<bool>>,
}

impl LabelMatrix {
    pub fn new(items: Vec<String>, raters: Vec<String>, labels: Vec<Vec<bool>>) -> Result<Self> {
        if raters.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "label matrix needs >= 2 raters, got {}",
                raters.len()
            )));
        }
        if items.is_empty() {
            return Err(Error::InvalidInput("label matrix needs >= 1 item".into()));
        }
        if labels.len() != items.len() || labels.iter().any(|row| row.len() != raters.len()) {
            return Err(Error::InvalidInput("label grid is not rectangular".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for item in &items {
            if !seen.insert(item) {
                return Err(Error::InvalidInput(format!("duplicate item id: {item}")));
            }
        }
        Ok(Self {
            items,
            raters,
            labels,
        })
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_raters(&self) -> usize {
        self.raters.len()
    }

    /// Label column for one rater.
    pub fn column(&self, rater: usize) -> Vec<bool> {
        self.labels.iter().map(|row| row[rater]).collect()
    }

    pub fn row(&self, item: usize) -> &[bool] {
        &self.labels[item]
    }
}

/// A kappa estimate; `degenerate` marks the chance-agreement-equals-one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaValue {
    pub value: f64,
    pub degenerate: bool,
}

/// Landis-Koch interpretation bands, with one label for 0.20 and below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KappaBand {
    SlightOrWorse,
    Fair,
    Moderate,
    Substantial,
    AlmostPerfect,
}

impl std::fmt::Display for KappaBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            KappaBand::SlightOrWorse => "Slight or worse",
            KappaBand::Fair => "Fair",
            KappaBand::Moderate => "Moderate",
            KappaBand::Substantial => "Substantial",
            KappaBand::AlmostPerfect => "Almost Perfect",
        };
        f.write_str(s)
    }
}

/// Band lookup with upper-inclusive edges; the value is rounded to four
/// decimals before comparison so reported precision decides borderline cases.
pub fn band(kappa: f64) -> KappaBand {
    let k = (kappa * 1e4).round() / 1e4;
    if k <= 0.20 {
        KappaBand::SlightOrWorse
    } else if k <= 0.40 {
        KappaBand::Fair
    } else if k <= 0.60 {
        KappaBand::Moderate
    } else if k <= 0.80 {
        KappaBand::Substantial
    } else {
        KappaBand::AlmostPerfect
    }
}

/// Full agreement summary for one feature's label matrix.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementResult {
    pub pa_overall: f64,
    pub pa_pairwise: BTreeMap<(String, String), f64>,
    pub cohen_kappa: BTreeMap<(String, String), KappaValue>,
    pub fleiss_kappa: KappaValue,
    pub prevalence: BTreeMap<String, f64>,
    pub band: KappaBand,
}

/// Overall PA (all raters match) and pairwise PA per rater pair.
pub fn percentage_agreement(m: &LabelMatrix) -> Result<(f64, BTreeMap<(String, String), f64>)> {
    let n = m.n_items() as f64;
    let all_match = m
        .labels
        .iter()
        .filter(|row| row.iter().all(|&v| v == row[0]))
        .count();
    let mut pairwise = BTreeMap::new();
    for a in 0..m.n_raters() {
        for b in (a + 1)..m.n_raters() {
            let matches = m.labels.iter().filter(|row| row[a] == row[b]).count();
            pairwise.insert(
                (m.raters[a].clone(), m.raters[b].clone()),
                matches as f64 / n,
            );
        }
    }
    Ok((all_match as f64 / n, pairwise))
}

/// Cohen's kappa between two label columns of equal length.
pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Result<KappaValue> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "label columns differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("empty label columns".into()));
    }
    let n = a.len() as f64;
    let matches = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let ta = a.iter().filter(|&&v| v).count() as f64;
    let tb = b.iter().filter(|&&v| v).count() as f64;
    let p_o = matches / n;
    let p_e = (ta / n) * (tb / n) + ((n - ta) / n) * ((n - tb) / n);
    if p_e >= 1.0 {
        // both raters constant and equal
        let identical = a == b;
        return Ok(KappaValue {
            value: if identical { 1.0 } else { 0.0 },
            degenerate: true,
        });
    }
    Ok(KappaValue {
        value: (p_o - p_e) / (1.0 - p_e),
        degenerate: false,
    })
}

/// Fleiss's kappa over the boolean category counts per item.
pub fn fleiss_kappa(m: &LabelMatrix) -> Result<KappaValue> {
    let n_raters = m.n_raters();
    if n_raters < 2 {
        return Err(Error::InvalidInput("fleiss kappa needs >= 2 raters".into()));
    }
    let n_items = m.n_items() as f64;
    let r = n_raters as f64;

    let mut p_bar = 0.0;
    let mut tot_true = 0.0;
    for row in &m.labels {
        let t = row.iter().filter(|&&v| v).count() as f64;
        let f = r - t;
        p_bar += (t * (t - 1.0) + f * (f - 1.0)) / (r * (r - 1.0));
        tot_true += t;
    }
    p_bar /= n_items;
    let p_true = tot_true / (n_items * r);
    let p_e = p_true * p_true + (1.0 - p_true) * (1.0 - p_true);
    if p_e >= 1.0 {
        // every rating in the matrix is the same category
        return Ok(KappaValue {
            value: if p_bar >= 1.0 { 1.0 } else { 0.0 },
            degenerate: true,
        });
    }
    Ok(KappaValue {
        value: (p_bar - p_e) / (1.0 - p_e),
        degenerate: false,
    })
}

/// Per-rater fraction of true labels.
pub fn prevalence(m: &LabelMatrix) -> BTreeMap<String, f64> {
    let n = m.n_items() as f64;
    m.raters
        .iter()
        .enumerate()
        .map(|(r, name)| {
            let t = m.labels.iter().filter(|row| row[r]).count() as f64;
            (name.clone(), t / n)
        })
        .collect()
}

/// Compute the full agreement summary for one label matrix.
pub fn evaluate(m: &LabelMatrix) -> Result<AgreementResult> {
    let (pa_overall, pa_pairwise) = percentage_agreement(m)?;
    let mut kappas = BTreeMap::new();
    for a in 0..m.n_raters() {
        for b in (a + 1)..m.n_raters() {
            let k = cohen_kappa(&m.column(a), &m.column(b))?;
            kappas.insert((m.raters[a].clone(), m.raters[b].clone()), k);
        }
    }
    let fleiss = fleiss_kappa(m)?;
    Ok(AgreementResult {
        pa_overall,
        pa_pairwise,
        cohen_kappa: kappas,
        fleiss_kappa: fleiss,
        prevalence: prevalence(m),
        band: band(fleiss.value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn matrix(labels: Vec<Vec<bool>>) -> LabelMatrix {
        let items = (0..labels.len()).map(|i| format!("item{i}")).collect();
        let raters = (0..labels[0].len()).map(|r| format!("r{r}")).collect();
        LabelMatrix::new(items, raters, labels).unwrap()
    }

    /// Exact-rational Cohen's kappa straight from the defining sums.
    fn cohen_oracle(a: &[bool], b: &[bool]) -> f64 {
        let n = a.len() as i128;
        let m = a.iter().zip(b).filter(|(x, y)| x == y).count() as i128;
        let ta = a.iter().filter(|&&v| v).count() as i128;
        let tb = b.iter().filter(|&&v| v).count() as i128;
        let pe_num = ta * tb + (n - ta) * (n - tb); // over n^2
        let num = m * n - pe_num;
        let den = n * n - pe_num;
        if den == 0 {
            return if a == b { 1.0 } else { 0.0 };
        }
        num as f64 / den as f64
    }

    /// Exact-rational Fleiss's kappa from the defining sums.
    fn fleiss_oracle(labels: &[Vec<bool>]) -> f64 {
        let n_items = labels.len() as i128;
        let r = labels[0].len() as i128;
        let mut a_sum: i128 = 0; // sum of n_ij (n_ij - 1)
        let mut col_true: i128 = 0;
        for row in labels {
            let t = row.iter().filter(|&&v| v).count() as i128;
            let f = r - t;
            a_sum += t * (t - 1) + f * (f - 1);
            col_true += t;
        }
        let d1 = n_items * r * (r - 1); // denominator of p_bar
        let total = n_items * r;
        let d2 = total * total; // denominator of p_e
        let b_sum = col_true * col_true + (total - col_true) * (total - col_true);
        let num = a_sum * d2 - b_sum * d1;
        let den = d1 * (d2 - b_sum);
        if den == 0 {
            return if a_sum == d1 { 1.0 } else { 0.0 };
        }
        num as f64 / den as f64
    }

    #[test]
    fn identical_columns_give_one() {
        let a = vec![true, false, true, false];
        let k = cohen_kappa(&a, &a).unwrap();
        assert_eq!(k.value, 1.0);
        assert!(!k.degenerate);
    }

    #[test]
    fn hand_case_kappa_zero() {
        // p_o = 0.5, p_e = 0.5
        let a = vec![true, true, false, false];
        let b = vec![true, false, true, false];
        let k = cohen_kappa(&a, &b).unwrap();
        assert!(k.value.abs() < 1e-15);
        let m = matrix(a.iter().zip(&b).map(|(&x, &y)| vec![x, y]).collect());
        let (_, pairs) = percentage_agreement(&m).unwrap();
        assert_eq!(pairs.values().next().copied().unwrap(), 0.5);
    }

    #[test]
    fn degenerate_constant_raters() {
        let a = vec![true, true, true];
        let k = cohen_kappa(&a, &a).unwrap();
        assert_eq!(k.value, 1.0);
        assert!(k.degenerate);
        let m = matrix(vec![vec![true, true], vec![true, true]]);
        let fk = fleiss_kappa(&m).unwrap();
        assert_eq!(fk.value, 1.0);
        assert!(fk.degenerate);
    }

    #[test]
    fn fleiss_hand_case_one_third() {
        // 3 raters, 4 items, per-item true counts [3, 0, 2, 1]
        let m = matrix(vec![
            vec![true, true, true],
            vec![false, false, false],
            vec![true, true, false],
            vec![true, false, false],
        ]);
        let k = fleiss_kappa(&m).unwrap();
        assert!((k.value - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn all_agree_two_classes_is_one() {
        let m = matrix(vec![
            vec![true, true, true],
            vec![false, false, false],
            vec![true, true, true],
        ]);
        let k = fleiss_kappa(&m).unwrap();
        assert_eq!(k.value, 1.0);
        assert!(!k.degenerate);
        let (pa, _) = percentage_agreement(&m).unwrap();
        assert_eq!(pa, 1.0);
    }

    #[test]
    fn matches_oracles_on_random_matrices() {
        let mut rng = StdRng::seed_from_u64(417);
        for _ in 0..200 {
            let n_items = rng.random_range(1..=50);
            let n_raters = rng.random_range(2..=10);
            let labels: Vec<Vec<bool>> = (0..n_items)
                .map(|_| (0..n_raters).map(|_| rng.random_bool(0.5)).collect())
                .collect();
            let m = matrix(labels.clone());
            let fk = fleiss_kappa(&m).unwrap();
            assert!(
                (fk.value - fleiss_oracle(&labels)).abs() < 1e-12,
                "fleiss mismatch"
            );
            let a = m.column(0);
            let b = m.column(1);
            let ck = cohen_kappa(&a, &b).unwrap();
            assert!((ck.value - cohen_oracle(&a, &b)).abs() < 1e-12, "cohen mismatch");
        }
    }

    #[test]
    fn cohen_symmetry() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..=40);
            let a: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
            let b: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
            let k1 = cohen_kappa(&a, &b).unwrap();
            let k2 = cohen_kappa(&b, &a).unwrap();
            assert_eq!(k1.value, k2.value);
        }
    }

    #[test]
    fn fleiss_invariant_under_permutations() {
        let mut rng = StdRng::seed_from_u64(99);
        let labels: Vec<Vec<bool>> = (0..20)
            .map(|_| (0..4).map(|_| rng.random_bool(0.4)).collect())
            .collect();
        let base = fleiss_kappa(&matrix(labels.clone())).unwrap().value;
        // item permutation (reverse); summation order changes, so allow ulps
        let rev: Vec<Vec<bool>> = labels.iter().rev().cloned().collect();
        assert!((fleiss_kappa(&matrix(rev)).unwrap().value - base).abs() < 1e-14);
        // rater-column rotation leaves per-item counts untouched
        let rot: Vec<Vec<bool>> = labels
            .iter()
            .map(|row| vec![row[3], row[0], row[1], row[2]])
            .collect();
        assert_eq!(fleiss_kappa(&matrix(rot)).unwrap().value, base);
    }

    #[test]
    fn random_labels_have_small_kappa() {
        let mut rng = StdRng::seed_from_u64(2024);
        let labels: Vec<Vec<bool>> = (0..1000)
            .map(|_| (0..3).map(|_| rng.random_bool(0.5)).collect())
            .collect();
        let m = matrix(labels);
        let k = fleiss_kappa(&m).unwrap();
        assert!(k.value.abs() < 0.1, "kappa = {}", k.value);
        let c = cohen_kappa(&m.column(0), &m.column(1)).unwrap();
        assert!(c.value.abs() < 0.1);
    }

    #[test]
    fn band_boundaries() {
        assert_eq!(band(0.8388), KappaBand::AlmostPerfect);
        assert_eq!(band(0.5224), KappaBand::Moderate);
        assert_eq!(band(0.3994), KappaBand::Fair);
        assert_eq!(band(0.45), KappaBand::Moderate);
        assert_eq!(band(0.40), KappaBand::Fair);
        assert_eq!(band(0.41), KappaBand::Moderate);
        assert_eq!(band(0.20), KappaBand::SlightOrWorse);
        assert_eq!(band(-0.3), KappaBand::SlightOrWorse);
        assert_eq!(band(1.0), KappaBand::AlmostPerfect);
        // rounding to 4 decimals decides the edge
        assert_eq!(band(0.400049), KappaBand::Fair);
        assert_eq!(band(0.40006), KappaBand::Moderate);
    }

    #[test]
    fn prevalence_per_rater() {
        let m = matrix(vec![
            vec![true, true],
            vec![false, true],
            vec![false, true],
            vec![false, true],
        ]);
        let p = prevalence(&m);
        assert_eq!(p["r0"], 0.25);
        assert_eq!(p["r1"], 1.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(LabelMatrix::new(
            vec!["a".into()],
            vec!["r0".into()],
            vec![vec![true]]
        )
        .is_err());
        assert!(LabelMatrix::new(
            vec!["a".into(), "a".into()],
            vec!["r0".into(), "r1".into()],
            vec![vec![true, true], vec![false, false]]
        )
        .is_err());
        assert!(cohen_kappa(&[true], &[true, false]).is_err());
    }
}
