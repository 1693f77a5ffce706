//! Detection and quantification of pathological regularization regimes.
//!
//! A regularization regime is *pathological* for a binary dataset when the
//! fitted model's trend indicator has the opposite sign to the trend of the
//! unregularized (`c -> 0`) fit. This crate provides:
//!
//! - [`tables`]: 2x2x2 contingency tables, dataset encoding and Simpson tests,
//! - [`ridge`]: closed-form ridge paths, exact rational regimes and a numeric
//!   grid/bisection scanner for any number of features,
//! - [`logistic`]: l2-penalized logistic regression (damped Newton), grid scans
//!   and stratified cross-validation,
//! - [`sampling`]: seeded table/dataset generators and Simpson rejection sampling,
//! - [`experiments`]: Monte-Carlo drivers with CSV/JSON outputs.

pub mod error;
pub mod experiments;
pub mod grid;
pub mod logistic;
pub mod regime;
pub mod ridge;
pub mod rng;
pub mod sampling;
pub mod tables;

pub use error::{Error, Result};
pub use grid::RegGrid;
pub use regime::{Endpoint, Interval, Rational, Regime};
pub use tables::{ContingencyTable222, Dataset, SimpsonVerdict};
