//! l2-penalized logistic regression with an unpenalized intercept.
//!
//! The objective is `(1/N) sum_j w_j l_j(beta0, beta) + c |beta|^2`, where
//! `l_j` is the negative log-likelihood of row `j`. Rows with identical
//! features and label are aggregated before fitting, so the cost of a fit
//! depends on the number of distinct patterns rather than on `N`.

mod cv;
mod model;
mod scan;
mod weights;

pub use cv::{fit_logistic_cv, stratified_folds, CvOptions, CvResult};
pub use model::{
    fit_logistic, sigmoid, trend_indicator_logistic, FitOptions, LogisticModel, LogisticProblem, Pattern,
};
pub use scan::{scan_pathological_logistic, ConditionReport, LogisticScan, ScanOptions, ScanPoint};
pub use weights::{SampleWeights, WeightScheme};
