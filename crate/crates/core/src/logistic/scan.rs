use serde::Serialize;

use super::model::{trend_indicator_logistic, FitOptions, LogisticProblem};
use super::weights::SampleWeights;
use crate::error::{Error, Result};
use crate::grid::RegGrid;
use crate::regime::{Endpoint, Interval, Regime};
use crate::tables::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    /// Conditioning variables `i` of the trends `T_{X_i = j}`.
    pub conditioning: Vec<usize>,
    /// Trends with absolute value at most this are treated as zero.
    pub threshold: f64,
    pub fit: FitOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { conditioning: vec![1, 2], threshold: 1e-9, fit: FitOptions::default() }
    }
}

/// Fit at one grid point; `trends[i - 1][j]` is `T_{X_i = j}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub c: f64,
    pub converged: bool,
    /// `(beta0, beta1, beta2)`.
    pub theta: Vec<f64>,
    pub trends: [[f64; 2]; 2],
}

/// Regime of one conditioning event `X_i = j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub variable: usize,
    pub value: usize,
    pub baseline_trend: f64,
    pub intervals: Regime,
    /// Grid point with the largest reversed trend, and that trend.
    pub most_reversed: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticScan {
    pub pathological: bool,
    pub baseline_c: f64,
    pub baseline_converged: bool,
    pub not_converged: usize,
    pub conditions: Vec<ConditionReport>,
    #[serde(skip)]
    pub points: Vec<ScanPoint>,
}

fn sign(v: f64, threshold: f64) -> i8 {
    if v > threshold {
        1
    } else if v < -threshold {
        -1
    } else {
        0
    }
}

/// Fits the model at every grid point, warm-starting each fit from the
/// previous one, and compares every trend with its value at the first
/// (smallest) grid point. Regime endpoints are geometric midpoints between
/// neighbouring grid points; a run reaching the last point is unbounded.
pub fn scan_pathological_logistic(
    ds: &Dataset,
    grid: &RegGrid,
    weights: &SampleWeights,
    opts: &ScanOptions,
) -> Result<LogisticScan> {
    if ds.p() != 2 {
        return Err(Error::WrongShape(format!("logistic scan needs 2 features, dataset has {}", ds.p())));
    }
    if let Some(&i) = opts.conditioning.iter().find(|i| !(1..=2).contains(*i)) {
        return Err(Error::IndexOutOfRange { index: i, p: 2 });
    }
    let problem = LogisticProblem::new(ds, weights)?;
    let mut points = Vec::with_capacity(grid.len());
    let mut warm: Option<Vec<f64>> = None;
    for &c in grid.values() {
        let model = problem.fit(c, &opts.fit, warm.as_deref())?;
        let mut trends = [[0.0; 2]; 2];
        for (i, row) in trends.iter_mut().enumerate() {
            for (j, t) in row.iter_mut().enumerate() {
                *t = trend_indicator_logistic(&model, i + 1, j)?;
            }
        }
        let theta = model.theta();
        points.push(ScanPoint { c, converged: model.converged, theta: theta.clone(), trends });
        warm = Some(theta);
    }

    let g = grid.values();
    let base = &points[0];
    let not_converged = points.iter().filter(|p| !p.converged).count();
    let mut conditions = Vec::new();
    for &i in &opts.conditioning {
        for j in 0..2 {
            let baseline = base.trends[i - 1][j];
            let s0 = if base.converged { sign(baseline, opts.threshold) } else { 0 };
            let reversed: Vec<bool> = points
                .iter()
                .map(|p| s0 != 0 && p.converged && sign(p.trends[i - 1][j], opts.threshold) == -s0)
                .collect();
            let mut intervals = Vec::new();
            let mut k = 1;
            while k < g.len() {
                if !reversed[k] {
                    k += 1;
                    continue;
                }
                let mut e = k;
                while e + 1 < g.len() && reversed[e + 1] {
                    e += 1;
                }
                let lo = Endpoint::approx((g[k - 1] * g[k]).sqrt());
                let hi = (e + 1 < g.len()).then(|| Endpoint::approx((g[e] * g[e + 1]).sqrt()));
                intervals.push(Interval::new(lo, hi));
                k = e + 1;
            }
            let most_reversed = points
                .iter()
                .zip(&reversed)
                .filter(|(_, r)| **r)
                .map(|(p, _)| (p.c, p.trends[i - 1][j]))
                .fold(None, |best: Option<(f64, f64)>, cur| match best {
                    Some(b) if b.1.abs() >= cur.1.abs() => Some(b),
                    _ => Some(cur),
                });
            conditions.push(ConditionReport {
                variable: i,
                value: j,
                baseline_trend: baseline,
                intervals: Regime::from_intervals(intervals),
                most_reversed,
            });
        }
    }
    Ok(LogisticScan {
        pathological: conditions.iter().any(|c| !c.intervals.is_empty()),
        baseline_c: g[0],
        baseline_converged: base.converged,
        not_converged,
        conditions,
        points,
    })
}
