//! Statistical building blocks shared by the agreement, model, and reporting
//! stages.

pub mod chi2;
pub mod special;
pub mod welch;

/// Mean and sample standard deviation (n - 1 denominator) of a slice.
/// Returns (0.0, 0.0) for an empty slice and sd = 0.0 for a singleton.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
