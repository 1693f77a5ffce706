use rand::seq::SliceRandom;
use serde::Serialize;

use super::model::{FitOptions, LogisticModel, LogisticProblem};
use super::weights::{SampleWeights, WeightScheme};
use crate::error::{Error, Result};
use crate::grid::RegGrid;
use crate::rng::{stream_id, stream_rng, purpose};
use crate::tables::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    pub k: usize,
    pub weights: WeightScheme,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self { k: 5, weights: WeightScheme::Uniform, seed: 0, fit: FitOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub c: f64,
    pub c_index: usize,
    /// Refit on the full dataset at `c`.
    pub model: LogisticModel,
    /// Mean validation accuracy per grid point.
    pub mean_scores: Vec<f64>,
    /// `fold_scores[f][g]`: accuracy of fold `f` at grid point `g`.
    pub fold_scores: Vec<Vec<f64>>,
    #[serde(skip)]
    pub folds: Vec<usize>,
}

/// Fold index per row. Each class is shuffled with its own seeded stream and
/// dealt round-robin, continuing the count across classes.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::FoldDegenerate(format!("need at least 2 folds, got {k}")));
    }
    if n < 2 * k {
        return Err(Error::FoldDegenerate(format!("{n} rows are too few for {k} folds")));
    }
    let mut folds = vec![0; n];
    let mut t = 0;
    for (class_idx, class) in [false, true].into_iter().enumerate() {
        let mut rows: Vec<usize> = (0..n).filter(|&r| labels[r] == class).collect();
        if rows.len() < 2 {
            return Err(Error::FoldDegenerate(format!("class {} has {} rows", u8::from(class), rows.len())));
        }
        let mut rng = stream_rng(seed, stream_id(purpose::CV_FOLDS, class_idx as u32, 0));
        rows.shuffle(&mut rng);
        for r in rows {
            folds[r] = t % k;
            t += 1;
        }
    }
    Ok(folds)
}

fn accuracy(model: &LogisticModel, ds: &Dataset, rows: &[usize], labels: &[bool]) -> f64 {
    let correct = rows
        .iter()
        .filter(|&&r| {
            let x: Vec<f64> = ds.x().row(r).iter().copied().collect();
            (model.eta(&x) > 0.0) == labels[r]
        })
        .count();
    correct as f64 / rows.len() as f64
}

/// k-fold cross-validated choice of `c` by mean validation accuracy; ties go
/// to the larger `c`. Class weights are computed once on the full dataset.
pub fn fit_logistic_cv(ds: &Dataset, grid: &RegGrid, opts: &CvOptions) -> Result<CvResult> {
    let labels = ds.labels();
    let folds = stratified_folds(&labels, opts.k, opts.seed)?;
    let weights = SampleWeights::from_scheme(opts.weights, &labels)?;
    let mut fold_scores = Vec::with_capacity(opts.k);
    for f in 0..opts.k {
        let train: Vec<usize> = (0..ds.n()).filter(|&r| folds[r] != f).collect();
        let valid: Vec<usize> = (0..ds.n()).filter(|&r| folds[r] == f).collect();
        let problem = LogisticProblem::from_rows(ds, &train, &weights)?;
        let mut warm: Option<Vec<f64>> = None;
        let mut scores = Vec::with_capacity(grid.len());
        for &c in grid.values() {
            let model = problem.fit(c, &opts.fit, warm.as_deref())?;
            scores.push(accuracy(&model, ds, &valid, &labels));
            warm = Some(model.theta());
        }
        fold_scores.push(scores);
    }
    let mean_scores: Vec<f64> =
        (0..grid.len()).map(|g| fold_scores.iter().map(|s| s[g]).sum::<f64>() / opts.k as f64).collect();
    let best = mean_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c_index = mean_scores.iter().rposition(|s| *s >= best - 1e-12).expect("grid is non-empty");
    let c = grid.values()[c_index];
    let model = LogisticProblem::new(ds, &weights)?.fit(c, &opts.fit, None)?;
    Ok(CvResult { c, c_index, model, mean_scores, fold_scores, folds })
}
