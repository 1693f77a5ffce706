use rayon::prelude::*;

use super::ridge::draw;
use super::stats::RatioEstimate;
use super::{ExperimentKind, ExperimentSpec, RatioRow};
use crate::error::Result;
use crate::logistic::{scan_pathological_logistic, SampleWeights, ScanOptions};
use crate::tables::ContingencyTable222;

/// `(pathological, degenerate, non-converged fits)` of one table.
fn verdict(spec: &ExperimentSpec, t: &ContingencyTable222) -> Result<(bool, bool, usize)> {
    let ds = t.encode()?;
    let (n0, n1) = ds.class_counts();
    if n0 == 0 || n1 == 0 {
        return Ok((false, true, 0));
    }
    let weights = SampleWeights::from_scheme(spec.weights, &ds.labels())?;
    let opts = ScanOptions { conditioning: spec.conditioning.clone(), ..ScanOptions::default() };
    let scan = scan_pathological_logistic(&ds, &spec.grid, &weights, &opts)?;
    Ok((scan.pathological, false, scan.not_converged))
}

/// Pathological ratio of the logistic model for each population and size.
/// Single-class tables have no trend and count as not pathological.
pub fn run_logistic_ratio_experiment(spec: &ExperimentSpec) -> Result<Vec<RatioRow>> {
    spec.expect_kind(ExperimentKind::LogisticRatios)?;
    let mut rows = Vec::new();
    for (g, &n) in spec.sizes.iter().enumerate() {
        for &condition in &spec.conditions {
            let batch = draw(spec, g, n, condition)?;
            let v: Vec<(bool, bool, usize)> =
                batch.tables.par_iter().map(|t| verdict(spec, t)).collect::<Result<_>>()?;
            rows.push(RatioRow {
                n,
                scheme: spec.scheme,
                condition,
                ratio: RatioEstimate::from_verdicts(v.iter().map(|x| x.0).collect(), spec.keep_verdicts),
                acceptance_rate: batch.acceptance_rate,
                degenerate: v.iter().filter(|x| x.1).count(),
                not_converged: v.iter().map(|x| x.2).sum(),
            });
        }
    }
    Ok(rows)
}
