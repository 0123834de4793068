//! Discrete choice models of availability: design matrices, binary and
//! multinomial logit MLE, robust standard errors, likelihood ratio tests,
//! and the adjusted likelihood ratio index.

pub mod design;
pub mod fit;
pub mod linalg;
pub mod spec;

pub use design::{build_design, Design};
pub use fit::{
    adjusted_rho2, choice_probabilities, fit_binary_logit, fit_multinomial_logit, lr_test,
    robust_covariance, significance_stars, ChoiceModelResult, LrTestResult, MnlModel,
};
pub use spec::{EqualitySet, ModelSpec, TermSpec, Transform};
