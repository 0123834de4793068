//! Maximum-likelihood estimation of binary and multinomial logit models.
//!
//! The multinomial core handles equality restrictions by parameter sharing:
//! one free parameter may enter several (column, alternative) cells of the
//! utility specification. The binary fitter is an independent implementation
//! of the logistic special case and doubles as an algebraic cross-check of
//! the multinomial path.

use crate::error::{Error, Result};
use crate::model::design::Design;
use crate::model::linalg::Matrix;
use crate::model::spec::EqualitySet;
use crate::stats::special::chi2_sf;

const MAX_ITER: usize = 100;
const GRAD_TOL: f64 = 1e-6;
const SEPARATION_BOUND: f64 = 50.0;
const MAX_HALVINGS: usize = 50;

#[derive(Debug, Clone)]
pub struct ChoiceModelResult {
    /// Free parameter ids, deterministic order.
    pub parameters: Vec<String>,
    pub coefficients: Vec<f64>,
    pub classical_se: Vec<f64>,
    pub robust_se: Vec<f64>,
    pub loglik_final: f64,
    pub loglik_null: f64,
    /// Free parameters after restrictions, constants included.
    pub k: usize,
    /// Free parameters excluding alternative-specific constants.
    pub k_explanatory: usize,
    pub n_obs: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// Choice probabilities from raw utilities (softmax, overflow-safe).
pub fn choice_probabilities(utilities: &[f64]) -> Vec<f64> {
    let m = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = utilities.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// One free parameter and the (column, alternative) cells it enters.
#[derive(Debug, Clone)]
struct Parameter {
    id: String,
    cells: Vec<(usize, usize)>, // (column index, alternative index)
    has_covariate: bool,
}

/// Multinomial logit likelihood over a design with shared parameters.
pub struct MnlModel {
    design: Design,
    params: Vec<Parameter>,
}

impl MnlModel {
    pub fn new(design: Design, equality: &[EqualitySet]) -> Result<Self> {
        let ref_idx = design
            .alternatives
            .iter()
            .position(|a| *a == design.reference)
            .ok_or_else(|| Error::ModelSpec("reference not in alternatives".into()))?;

        // map (column name, alternative name) -> equality set index
        let mut eq_of: std::collections::BTreeMap<(String, String), usize> =
            std::collections::BTreeMap::new();
        for (s, set) in equality.iter().enumerate() {
            for (col, alt) in &set.entries {
                if eq_of.insert((col.clone(), alt.clone()), s).is_some() {
                    return Err(Error::ModelSpec(format!(
                        "({col}, {alt}) appears in more than one equality set"
                    )));
                }
            }
        }

        let mut params: Vec<Parameter> = Vec::new();
        let mut param_of_set: std::collections::BTreeMap<usize, usize> =
            std::collections::BTreeMap::new();
        let mut matched: std::collections::BTreeSet<(String, String)> =
            std::collections::BTreeSet::new();

        for (c, col_name) in design.columns.iter().enumerate() {
            for (a, alt) in design.alternatives.iter().enumerate() {
                if a == ref_idx || !design.attachments[c].contains(alt) {
                    continue;
                }
                let key = (col_name.clone(), alt.clone());
                if let Some(&s) = eq_of.get(&key) {
                    matched.insert(key);
                    if let Some(&p) = param_of_set.get(&s) {
                        params[p].cells.push((c, a));
                        params[p].has_covariate |= col_name != "const";
                    } else {
                        let id = equality[s]
                            .name
                            .clone()
                            .unwrap_or_else(|| format!("b_{col_name}_shared"));
                        param_of_set.insert(s, params.len());
                        params.push(Parameter {
                            id,
                            cells: vec![(c, a)],
                            has_covariate: col_name != "const",
                        });
                    }
                } else {
                    let id = if col_name == "const" {
                        format!("asc_{alt}")
                    } else {
                        format!("b_{col_name}_{alt}")
                    };
                    params.push(Parameter {
                        id,
                        cells: vec![(c, a)],
                        has_covariate: col_name != "const",
                    });
                }
            }
        }
        for (col, alt) in eq_of.keys() {
            if !matched.contains(&(col.clone(), alt.clone())) {
                return Err(Error::ModelSpec(format!(
                    "equality entry ({col}, {alt}) matches no design cell"
                )));
            }
        }
        Ok(Self { design, params })
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn parameter_ids(&self) -> Vec<String> {
        self.params.iter().map(|p| p.id.clone()).collect()
    }

    fn n_alts(&self) -> usize {
        self.design.alternatives.len()
    }

    /// z[p][j] for one observation: sum of covariate values over the cells of
    /// parameter p that enter alternative j.
    fn fill_z(&self, row: &[f64], z: &mut [Vec<f64>]) {
        for (p, param) in self.params.iter().enumerate() {
            for v in z[p].iter_mut() {
                *v = 0.0;
            }
            for &(c, a) in &param.cells {
                z[p][a] += row[c];
            }
        }
    }

    fn utilities(&self, beta: &[f64], z: &[Vec<f64>]) -> Vec<f64> {
        let mut v = vec![0.0; self.n_alts()];
        for (p, zp) in z.iter().enumerate() {
            let b = beta[p];
            if b == 0.0 {
                continue;
            }
            for (j, &zij) in zp.iter().enumerate() {
                v[j] += b * zij;
            }
        }
        v
    }

    pub fn loglik(&self, beta: &[f64]) -> f64 {
        let mut z = vec![vec![0.0; self.n_alts()]; self.params.len()];
        let mut ll = 0.0;
        for (row, &y) in self.design.rows.iter().zip(&self.design.outcome) {
            self.fill_z(row, &mut z);
            let probs = choice_probabilities(&self.utilities(beta, &z));
            ll += probs[y].max(1e-300).ln();
        }
        ll
    }

    /// Log-likelihood, gradient, Hessian, and per-observation scores at beta.
    pub fn derivatives(&self, beta: &[f64]) -> (f64, Vec<f64>, Matrix, Vec<Vec<f64>>) {
        let np = self.params.len();
        let na = self.n_alts();
        let mut z = vec![vec![0.0; na]; np];
        let mut grad = vec![0.0; np];
        let mut hess = Matrix::zeros(np);
        let mut scores = Vec::with_capacity(self.design.n_obs());
        let mut ll = 0.0;
        let mut m = vec![0.0; np];

        for (row, &y) in self.design.rows.iter().zip(&self.design.outcome) {
            self.fill_z(row, &mut z);
            let probs = choice_probabilities(&self.utilities(beta, &z));
            ll += probs[y].max(1e-300).ln();
            for p in 0..np {
                m[p] = (0..na).map(|j| probs[j] * z[p][j]).sum();
            }
            let mut score = vec![0.0; np];
            for p in 0..np {
                score[p] = z[p][y] - m[p];
                grad[p] += score[p];
            }
            for p in 0..np {
                for q in p..np {
                    let e: f64 = (0..na).map(|j| probs[j] * z[p][j] * z[q][j]).sum();
                    let h = e - m[p] * m[q];
                    hess.add_at(p, q, -h);
                    if q != p {
                        hess.add_at(q, p, -h);
                    }
                }
            }
            scores.push(score);
        }
        (ll, grad, hess, scores)
    }

    /// Newton-Raphson with step halving from a zero start.
    fn maximize(&self) -> Result<NewtonOutcome> {
        let np = self.params.len();
        let mut beta = vec![0.0; np];
        let mut iterations = 0;
        let (mut ll, mut grad, mut hess, mut scores) = self.derivatives(&beta);
        let mut gnorm = inf_norm(&grad);
        let mut converged = gnorm < GRAD_TOL;
        let mut polish_steps = 0;
        let mut ll_trace = vec![ll];

        while !converged && iterations < MAX_ITER {
            iterations += 1;
            let neg_h = hess.scaled(-1.0);
            let delta = neg_h.solve(&grad).map_err(|e| {
                Error::Estimation(format!("hessian solve failed: {e}"))
            })?;
            // when the predicted quadratic gain is below LL rounding noise
            // the line search cannot measure progress: take the full step
            let predicted: f64 =
                0.5 * grad.iter().zip(&delta).map(|(g, d)| g * d).sum::<f64>();
            if predicted.abs() <= 1e-11 * (1.0 + ll.abs()) {
                polish_steps += 1;
                if polish_steps > 3 {
                    break;
                }
                for (b, d) in beta.iter_mut().zip(&delta) {
                    *b += d;
                }
            } else {
                polish_steps = 0;
                let mut step = 1.0;
                let mut improved = false;
                for _ in 0..MAX_HALVINGS {
                    let cand: Vec<f64> =
                        beta.iter().zip(&delta).map(|(b, d)| b + step * d).collect();
                    let cand_ll = self.loglik(&cand);
                    if cand_ll >= ll {
                        beta = cand;
                        improved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !improved {
                    break;
                }
            }
            self.check_separation(&beta)?;
            let d = self.derivatives(&beta);
            ll = d.0;
            grad = d.1;
            hess = d.2;
            scores = d.3;
            gnorm = inf_norm(&grad);
            converged = gnorm < GRAD_TOL;
            ll_trace.push(ll);
        }
        Ok(NewtonOutcome {
            beta,
            loglik: ll,
            hessian: hess,
            scores,
            gradient_norm: gnorm,
            converged,
            iterations,
            ll_trace,
        })
    }

    fn check_separation(&self, beta: &[f64]) -> Result<()> {
        for (p, param) in self.params.iter().enumerate() {
            if beta[p].abs() > SEPARATION_BOUND {
                let col = &self.design.columns[param.cells[0].0];
                return Err(Error::Estimation(format!(
                    "separation detected on column {col} (parameter {} diverged to {:.2})",
                    param.id, beta[p]
                )));
            }
        }
        Ok(())
    }

    fn null_model(&self) -> Result<MnlModel> {
        let n = self.design.n_obs();
        let non_ref: Vec<String> = self
            .design
            .alternatives
            .iter()
            .filter(|a| **a != self.design.reference)
            .cloned()
            .collect();
        let design = Design {
            columns: vec!["const".into()],
            attachments: vec![non_ref],
            rows: vec![vec![1.0]; n],
            outcome: self.design.outcome.clone(),
            alternatives: self.design.alternatives.clone(),
            reference: self.design.reference.clone(),
        };
        MnlModel::new(design, &[])
    }
}

struct NewtonOutcome {
    beta: Vec<f64>,
    loglik: f64,
    hessian: Matrix,
    scores: Vec<Vec<f64>>,
    gradient_norm: f64,
    converged: bool,
    iterations: usize,
    ll_trace: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Sandwich covariance H^-1 G H^-1 from the observed-information Hessian and
/// per-observation scores.
pub fn robust_covariance(hessian: &Matrix, scores: &[Vec<f64>]) -> Result<Matrix> {
    let np = hessian.n();
    let mut g = Matrix::zeros(np);
    for s in scores {
        for p in 0..np {
            for q in 0..np {
                g.add_at(p, q, s[p] * s[q]);
            }
        }
    }
    let inv = hessian.scaled(-1.0).inverse().map_err(|e| {
        Error::Numerical(format!("robust covariance: {e}"))
    })?;
    Ok(inv.mul(&g).mul(&inv))
}

fn finish(
    model: &MnlModel,
    out: NewtonOutcome,
    loglik_null: f64,
) -> Result<ChoiceModelResult> {
    let np = model.n_params();
    let neg_h = out.hessian.scaled(-1.0);
    let classical_cov = neg_h.inverse().map_err(|e| {
        Error::Numerical(format!("classical covariance: {e}"))
    })?;
    let robust_cov = robust_covariance(&out.hessian, &out.scores)?;
    let classical_se: Vec<f64> = (0..np).map(|i| classical_cov.get(i, i).sqrt()).collect();
    let robust_se: Vec<f64> = (0..np).map(|i| robust_cov.get(i, i).sqrt()).collect();
    let k_explanatory = model.params.iter().filter(|p| p.has_covariate).count();
    Ok(ChoiceModelResult {
        parameters: model.parameter_ids(),
        coefficients: out.beta,
        classical_se,
        robust_se,
        loglik_final: out.loglik,
        loglik_null,
        k: np,
        k_explanatory,
        n_obs: model.design.n_obs(),
        converged: out.converged,
        gradient_norm: out.gradient_norm,
        iterations: out.iterations,
    })
}

/// Fit a multinomial logit with optional equality restrictions.
pub fn fit_multinomial_logit(
    design: &Design,
    equality: &[EqualitySet],
) -> Result<ChoiceModelResult> {
    let model = MnlModel::new(design.clone(), equality)?;
    let null = model.null_model()?;
    let null_out = null.maximize()?;
    let out = model.maximize()?;
    finish(&model, out, null_out.loglik)
}

/// Independent binary logistic fitter. `rows` must carry the intercept as
/// the first column; the null model refits on that column alone.
pub fn fit_binary_logit(
    rows: &[Vec<f64>],
    columns: &[String],
    outcome: &[bool],
) -> Result<ChoiceModelResult> {
    if rows.len() != outcome.len() || rows.is_empty() {
        return Err(Error::InvalidInput("design/outcome length mismatch".into()));
    }
    let np = columns.len();
    if rows.iter().any(|r| r.len() != np) {
        return Err(Error::InvalidInput("ragged design matrix".into()));
    }
    let null_rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0]]).collect();
    let null = binary_newton(&null_rows, outcome, &columns[..1])?;
    let out = binary_newton(rows, outcome, columns)?;

    let neg_h = out.hessian.scaled(-1.0);
    let classical_cov = neg_h
        .inverse()
        .map_err(|e| Error::Numerical(format!("classical covariance: {e}")))?;
    let robust_cov = robust_covariance(&out.hessian, &out.scores)?;
    let classical_se: Vec<f64> = (0..np).map(|i| classical_cov.get(i, i).sqrt()).collect();
    let robust_se: Vec<f64> = (0..np).map(|i| robust_cov.get(i, i).sqrt()).collect();
    let k_explanatory = columns.iter().filter(|c| *c != "const").count();
    Ok(ChoiceModelResult {
        parameters: columns
            .iter()
            .map(|c| if c == "const" { "asc".to_string() } else { format!("b_{c}") })
            .collect(),
        coefficients: out.beta,
        classical_se,
        robust_se,
        loglik_final: out.loglik,
        loglik_null: null.loglik,
        k: np,
        k_explanatory,
        n_obs: rows.len(),
        converged: out.converged,
        gradient_norm: out.gradient_norm,
        iterations: out.iterations,
    })
}

fn binary_newton(rows: &[Vec<f64>], y: &[bool], columns: &[String]) -> Result<NewtonOutcome> {
    let np = rows[0].len();
    let derivs = |beta: &[f64]| {
        let mut ll = 0.0;
        let mut grad = vec![0.0; np];
        let mut hess = Matrix::zeros(np);
        let mut scores = Vec::with_capacity(rows.len());
        for (x, &yi) in rows.iter().zip(y) {
            let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-eta).exp());
            ll += if yi { p.max(1e-300).ln() } else { (1.0 - p).max(1e-300).ln() };
            let resid = (yi as u8 as f64) - p;
            let w = p * (1.0 - p);
            let mut score = vec![0.0; np];
            for i in 0..np {
                score[i] = x[i] * resid;
                grad[i] += score[i];
                for j in i..np {
                    let h = w * x[i] * x[j];
                    hess.add_at(i, j, -h);
                    if j != i {
                        hess.add_at(j, i, -h);
                    }
                }
            }
            scores.push(score);
        }
        (ll, grad, hess, scores)
    };
    let loglik_only = |beta: &[f64]| {
        let mut ll = 0.0;
        for (x, &yi) in rows.iter().zip(y) {
            let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-eta).exp());
            ll += if yi { p.max(1e-300).ln() } else { (1.0 - p).max(1e-300).ln() };
        }
        ll
    };

    let mut beta = vec![0.0; np];
    let (mut ll, mut grad, mut hess, mut scores) = derivs(&beta);
    let mut gnorm = inf_norm(&grad);
    let mut converged = gnorm < GRAD_TOL;
    let mut iterations = 0;
    let mut polish_steps = 0;
    let mut ll_trace = vec![ll];
    while !converged && iterations < MAX_ITER {
        iterations += 1;
        let delta = hess
            .scaled(-1.0)
            .solve(&grad)
            .map_err(|e| Error::Estimation(format!("hessian solve failed: {e}")))?;
        let predicted: f64 = 0.5 * grad.iter().zip(&delta).map(|(g, d)| g * d).sum::<f64>();
        if predicted.abs() <= 1e-11 * (1.0 + ll.abs()) {
            // below LL rounding noise: full step, bounded polish
            polish_steps += 1;
            if polish_steps > 3 {
                break;
            }
            for (b, d) in beta.iter_mut().zip(&delta) {
                *b += d;
            }
        } else {
            polish_steps = 0;
            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..MAX_HALVINGS {
                let cand: Vec<f64> =
                    beta.iter().zip(&delta).map(|(b, d)| b + step * d).collect();
                let cand_ll = loglik_only(&cand);
                if cand_ll >= ll {
                    beta = cand;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        for (i, b) in beta.iter().enumerate() {
            if b.abs() > SEPARATION_BOUND {
                return Err(Error::Estimation(format!(
                    "separation detected on column {}",
                    columns[i]
                )));
            }
        }
        let d = derivs(&beta);
        ll = d.0;
        grad = d.1;
        hess = d.2;
        scores = d.3;
        gnorm = inf_norm(&grad);
        converged = gnorm < GRAD_TOL;
        ll_trace.push(ll);
    }
    Ok(NewtonOutcome {
        beta,
        loglik: ll,
        hessian: hess,
        scores,
        gradient_norm: gnorm,
        converged,
        iterations,
        ll_trace,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LrTestResult {
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
}

/// Likelihood ratio test between nested fits.
pub fn lr_test(restricted: &ChoiceModelResult, full: &ChoiceModelResult) -> Result<LrTestResult> {
    if full.loglik_final < restricted.loglik_final - 1e-6 {
        return Err(Error::InvalidInput(format!(
            "nesting violation: full loglik {} below restricted {}",
            full.loglik_final, restricted.loglik_final
        )));
    }
    if full.k < restricted.k {
        return Err(Error::InvalidInput(
            "restricted model has more parameters than full".into(),
        ));
    }
    let df = full.k - restricted.k;
    let statistic = (2.0 * (full.loglik_final - restricted.loglik_final)).max(0.0);
    let p = if df == 0 { 1.0 } else { chi2_sf(statistic, df as f64) };
    Ok(LrTestResult { statistic, df, p })
}

/// Adjusted likelihood ratio index: 1 - (L_final - K) / L_null.
pub fn adjusted_rho2(loglik_final: f64, loglik_null: f64, k: usize) -> f64 {
    assert!(loglik_null < 0.0, "null log-likelihood must be negative");
    1.0 - (loglik_final - k as f64) / loglik_null
}

/// Significance stars at the conventional thresholds.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::design::Design;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn binary_design(xs: &[f64], y: &[bool]) -> Design {
        Design {
            columns: vec!["const".into(), "x".into()],
            attachments: vec![vec!["yes".into()], vec!["yes".into()]],
            rows: xs.iter().map(|&x| vec![1.0, x]).collect(),
            outcome: y.iter().map(|&b| if b { 1 } else { 0 }).collect(),
            alternatives: vec!["no".into(), "yes".into()],
            reference: "no".into(),
        }
    }

    #[test]
    fn probabilities_sum_to_one_and_shift_invariant() {
        let u = vec![0.3, -1.2, 2.5, 0.0];
        let p = choice_probabilities(&u);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = u.iter().map(|v| v + 123.456).collect();
        let p2 = choice_probabilities(&shifted);
        for (a, b) in p.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn intercept_only_closed_form() {
        // 5% positives: alpha = ln(0.05/0.95)
        let n = 1000;
        let y: Vec<bool> = (0..n).map(|i| i < 50).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![1.0]).collect();
        let r = fit_binary_logit(&rows, &["const".into()], &y).unwrap();
        assert!(r.converged);
        assert!((r.coefficients[0] - (-2.944_438_979_166_440_3)).abs() < 1e-6);
        assert!((r.loglik_final - r.loglik_null).abs() < 1e-9);
    }

    #[test]
    fn probability_at_published_constant() {
        // all covariates at reference/mean leaves only the constant
        let p = 1.0 / (1.0 + (3.89f64).exp());
        assert!((p - 0.0200357).abs() < 5e-5);
    }

    #[test]
    fn binary_recovery_on_synthetic_data() {
        let mut rng = StdRng::seed_from_u64(42);
        let n = 5000;
        let alpha = -3.0;
        let beta = 1.2;
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.sample(rand_distr::StandardNormal);
            let p = 1.0 / (1.0 + (-(alpha + beta * x)).exp());
            rows.push(vec![1.0, x]);
            y.push(rng.random::<f64>() < p);
        }
        let r = fit_binary_logit(&rows, &["const".into(), "x".into()], &y).unwrap();
        assert!(r.converged);
        assert!((r.coefficients[0] - alpha).abs() < 3.0 * r.robust_se[0]);
        assert!((r.coefficients[1] - beta).abs() < 3.0 * r.robust_se[1]);
        assert!(r.loglik_final >= r.loglik_null);
        // well-specified model: robust and classical SEs agree closely
        for i in 0..2 {
            let ratio = r.robust_se[i] / r.classical_se[i];
            assert!((0.9..1.1).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn mnl_reduces_to_binary() {
        let mut rng = StdRng::seed_from_u64(7);
        let n = 800;
        let xs: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let y: Vec<bool> = xs
            .iter()
            .map(|&x| {
                let p = 1.0 / (1.0 + (-(0.5 + 0.8 * x)).exp());
                rng.random::<f64>() < p
            })
            .collect();
        let d = binary_design(&xs, &y);
        let mnl = fit_multinomial_logit(&d, &[]).unwrap();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let bin = fit_binary_logit(&rows, &["const".into(), "x".into()], &y).unwrap();
        assert!((mnl.loglik_final - bin.loglik_final).abs() < 1e-8);
        for (a, b) in mnl.coefficients.iter().zip(&bin.coefficients) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!((mnl.loglik_null - bin.loglik_null).abs() < 1e-8);
    }

    #[test]
    fn separation_is_detected() {
        // perfectly separated outcome with a small covariate scale forces the
        // coefficient past the divergence bound
        let xs: Vec<f64> = (0..40).map(|i| if i < 20 { -0.05 } else { 0.05 }).collect();
        let y: Vec<bool> = xs.iter().map(|&x| x > 0.0).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let err = fit_binary_logit(&rows, &["const".into(), "x".into()], &y).unwrap_err();
        assert!(err.to_string().contains("separation"), "{err}");
        assert!(err.to_string().contains('x'));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = 120;
        let design = Design {
            columns: vec!["const".into(), "x1".into(), "x2".into()],
            attachments: vec![
                vec!["b".into(), "c".into()],
                vec!["b".into(), "c".into()],
                vec!["b".into()],
            ],
            rows: (0..n)
                .map(|_| {
                    vec![
                        1.0,
                        rng.sample::<f64, _>(rand_distr::StandardNormal),
                        rng.sample::<f64, _>(rand_distr::StandardNormal),
                    ]
                })
                .collect(),
            outcome: (0..n).map(|_| rng.random_range(0..3)).collect(),
            alternatives: vec!["a".into(), "b".into(), "c".into()],
            reference: "a".into(),
        };
        let equality = vec![EqualitySet {
            name: Some("x1_shared".into()),
            entries: vec![("x1".into(), "b".into()), ("x1".into(), "c".into())],
        }];
        let model = MnlModel::new(design, &equality).unwrap();
        let np = model.n_params();
        for trial in 0..10 {
            let beta: Vec<f64> = (0..np)
                .map(|i| 0.3 * ((trial * np + i) as f64 * 0.7).sin())
                .collect();
            let (_, grad, _, _) = model.derivatives(&beta);
            for p in 0..np {
                let h = 1e-5;
                let mut up = beta.clone();
                up[p] += h;
                let mut dn = beta.clone();
                dn[p] -= h;
                let fd = (model.loglik(&up) - model.loglik(&dn)) / (2.0 * h);
                let denom = grad[p].abs().max(1.0);
                assert!(
                    (grad[p] - fd).abs() / denom < 1e-5,
                    "param {p}: analytic {} fd {fd}",
                    grad[p]
                );
            }
        }
    }

    #[test]
    fn shared_gradient_is_sum_of_per_alternative_gradients() {
        let mut rng = StdRng::seed_from_u64(23);
        let n = 150;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![1.0, rng.sample::<f64, _>(rand_distr::StandardNormal)])
            .collect();
        let outcome: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let mk = |equality: Vec<EqualitySet>| {
            MnlModel::new(
                Design {
                    columns: vec!["const".into(), "x".into()],
                    attachments: vec![
                        vec!["b".into(), "c".into()],
                        vec!["b".into(), "c".into()],
                    ],
                    rows: rows.clone(),
                    outcome: outcome.clone(),
                    alternatives: vec!["a".into(), "b".into(), "c".into()],
                    reference: "a".into(),
                },
                &equality,
            )
            .unwrap()
        };
        let free = mk(vec![]);
        let shared = mk(vec![EqualitySet {
            name: Some("x_shared".into()),
            entries: vec![("x".into(), "b".into()), ("x".into(), "c".into())],
        }]);
        // matching coefficient values so both models sit at the same point
        let ids = free.parameter_ids();
        assert_eq!(ids, vec!["asc_b", "asc_c", "b_x_b", "b_x_c"]);
        let free_beta = vec![0.1, -0.2, 0.35, 0.35];
        let shared_ids = shared.parameter_ids();
        assert_eq!(shared_ids, vec!["asc_b", "asc_c", "x_shared"]);
        let shared_beta = vec![0.1, -0.2, 0.35];
        let (_, g_free, _, _) = free.derivatives(&free_beta);
        let (_, g_shared, _, _) = shared.derivatives(&shared_beta);
        let summed = g_free[2] + g_free[3]; // b_x_b + b_x_c
        assert!((g_shared[2] - summed).abs() < 1e-10);
    }

    #[test]
    fn centering_changes_only_the_intercept() {
        let mut rng = StdRng::seed_from_u64(31);
        let n = 600;
        let xs: Vec<f64> = (0..n)
            .map(|_| 5.0 + rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let y: Vec<bool> = xs
            .iter()
            .map(|&x| rng.random::<f64>() < 1.0 / (1.0 + (-(0.3 * x - 2.0)).exp()))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let raw: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let centered: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x - mean]).collect();
        let cols = ["const".to_string(), "x".to_string()];
        let r1 = fit_binary_logit(&raw, &cols, &y).unwrap();
        let r2 = fit_binary_logit(&centered, &cols, &y).unwrap();
        assert!((r1.coefficients[1] - r2.coefficients[1]).abs() < 1e-8);
        assert!((r1.loglik_final - r2.loglik_final).abs() < 1e-8);
        assert!((r1.coefficients[0] - (r2.coefficients[0] - r2.coefficients[1] * mean)).abs() < 1e-6);
    }

    #[test]
    fn binary_gradient_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(61);
        let n = 150;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                vec![
                    1.0,
                    rng.sample::<f64, _>(rand_distr::StandardNormal),
                    rng.sample::<f64, _>(rand_distr::StandardNormal),
                ]
            })
            .collect();
        let y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        let ll = |beta: &[f64]| -> f64 {
            rows.iter()
                .zip(&y)
                .map(|(x, &yi)| {
                    let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
                    let p = 1.0 / (1.0 + (-eta).exp());
                    if yi { p.ln() } else { (1.0 - p).ln() }
                })
                .sum()
        };
        for trial in 0..10 {
            let beta: Vec<f64> = (0..3)
                .map(|i| 0.4 * ((trial * 3 + i) as f64 * 1.3).cos())
                .collect();
            // analytic gradient of the logistic log-likelihood
            let mut grad = vec![0.0; 3];
            for (x, &yi) in rows.iter().zip(&y) {
                let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
                let p = 1.0 / (1.0 + (-eta).exp());
                for i in 0..3 {
                    grad[i] += x[i] * ((yi as u8 as f64) - p);
                }
            }
            for i in 0..3 {
                let h = 1e-5;
                let mut up = beta.clone();
                up[i] += h;
                let mut dn = beta.clone();
                dn[i] -= h;
                let fd = (ll(&up) - ll(&dn)) / (2.0 * h);
                let scale = grad[i].abs().max(1.0);
                assert!((grad[i] - fd).abs() / scale < 1e-6, "{} vs {fd}", grad[i]);
            }
        }
    }

    #[test]
    fn loglik_nondecreasing_across_iterations() {
        let mut rng = StdRng::seed_from_u64(83);
        let n = 500;
        let xs: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let y: Vec<bool> = xs
            .iter()
            .map(|&x| rng.random::<f64>() < 1.0 / (1.0 + (-(0.7 * x - 1.0)).exp()))
            .collect();
        let model = MnlModel::new(binary_design(&xs, &y), &[]).unwrap();
        let out = model.maximize().unwrap();
        assert!(out.converged);
        for w in out.ll_trace.windows(2) {
            // full-step polish iterations may wobble below LL rounding noise
            assert!(
                w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()),
                "log-likelihood decreased: {} -> {}",
                w[0],
                w[1]
            );
        }
        assert!(out.ll_trace.len() >= 2);
    }

    #[test]
    fn hessian_negative_semidefinite_at_optimum() {
        let mut rng = StdRng::seed_from_u64(5);
        let n = 400;
        let xs: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let y: Vec<bool> = xs
            .iter()
            .map(|&x| rng.random::<f64>() < 1.0 / (1.0 + (-(0.5 * x)).exp()))
            .collect();
        let d = binary_design(&xs, &y);
        let model = MnlModel::new(d, &[]).unwrap();
        let out = model.maximize().unwrap();
        let eig = out.hessian.eigenvalues_symmetric();
        for e in eig {
            assert!(e <= 1e-8, "eigenvalue {e} > 0");
        }
    }

    #[test]
    fn lr_test_conventions() {
        let mut a = ChoiceModelResult {
            parameters: vec!["asc".into()],
            coefficients: vec![0.0],
            classical_se: vec![0.1],
            robust_se: vec![0.1],
            loglik_final: -100.0,
            loglik_null: -100.0,
            k: 1,
            k_explanatory: 0,
            n_obs: 50,
            converged: true,
            gradient_norm: 0.0,
            iterations: 3,
        };
        let same = lr_test(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p, 1.0);

        let mut full = a.clone();
        full.k = 2;
        full.loglik_final = -95.0;
        let r = lr_test(&a, &full).unwrap();
        assert!((r.statistic - 10.0).abs() < 1e-12);
        assert_eq!(r.df, 1);
        assert!((r.p - chi2_sf(10.0, 1.0)).abs() < 1e-15);

        a.loglik_final = -90.0;
        assert!(lr_test(&a, &full).is_err(), "nesting violation");
    }

    #[test]
    fn adjusted_rho2_reference_values() {
        assert!((adjusted_rho2(-1850.0, -2092.0, 8) - 0.112).abs() < 0.001);
        assert!((adjusted_rho2(-7146.0, -7895.0, 26) - 0.0916).abs() < 0.0005);
        assert_eq!(adjusted_rho2(-500.0, -500.0, 0), 0.0);
    }

    #[test]
    fn robust_covariance_singular_hessian_errors() {
        // rank-1 Hessian from a single observation with two columns
        let mut h = Matrix::zeros(2);
        h.set(0, 0, -0.25);
        h.set(0, 1, -0.25);
        h.set(1, 0, -0.25);
        h.set(1, 1, -0.25);
        let scores = vec![vec![0.5, 0.5]];
        let err = robust_covariance(&h, &scores).unwrap_err();
        assert!(err.to_string().contains("condition number"));
    }

    #[test]
    fn stars_thresholds() {
        assert_eq!(significance_stars(0.0005), "***");
        assert_eq!(significance_stars(0.005), "**");
        assert_eq!(significance_stars(0.03), "*");
        assert_eq!(significance_stars(0.2), "");
    }
}
