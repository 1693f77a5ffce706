use serde::Serialize;

use super::{ExperimentKind, ExperimentSpec};
use crate::error::{Error, Result};
use crate::logistic::{
    fit_logistic_cv, scan_pathological_logistic, trend_indicator_logistic, CvOptions, FitOptions, LogisticScan,
    SampleWeights, ScanOptions, WeightScheme,
};
use crate::tables::{simpson_verdict_within, Dataset, SimpsonVerdict, Stratifier};

const ZERO: f64 = 1e-9;

/// Trend `T_{X_variable = value}` at the chosen `c`, against its baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendAtC {
    pub variable: usize,
    pub value: usize,
    pub baseline_trend: f64,
    pub trend: f64,
    /// Opposite, non-zero sign to the baseline.
    pub reversed: bool,
    /// The chosen `c` lies in the scanned regime of this trend.
    pub in_regime: bool,
}

/// Cross-validated fit under one weighting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvArm {
    pub weights: WeightScheme,
    pub c: f64,
    pub c_index: usize,
    pub mean_accuracy: f64,
    pub trends: Vec<TrendAtC>,
    pub scan: LogisticScan,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvDemoReport {
    /// Simpson verdict with strata given by the first conditioning variable.
    pub simpson: SimpsonVerdict,
    /// Smallest grid value, standing in for `c -> 0`.
    pub baseline_c: f64,
    pub folds: usize,
    pub seed: u64,
    pub arms: Vec<CvArm>,
    /// Some arm reverses some trend at its chosen `c`.
    pub reversal: bool,
}

impl CvDemoReport {
    pub(super) fn results_csv(&self) -> String {
        let mut s = String::from("weights,c,c_index,variable,value,baseline_trend,trend,reversed,in_regime\n");
        for arm in &self.arms {
            let w = match arm.weights {
                WeightScheme::Uniform => "uniform",
                WeightScheme::Balanced => "balanced",
            };
            for t in &arm.trends {
                s.push_str(&format!(
                    "{w},{},{},{},{},{},{},{},{}\n",
                    arm.c, arm.c_index, t.variable, t.value, t.baseline_trend, t.trend, t.reversed, t.in_regime
                ));
            }
        }
        s
    }

    pub(super) fn summary_table(&self) -> String {
        let mut s = format!("simpson: {}, baseline c = {:e}\n", self.simpson.name(), self.baseline_c);
        for arm in &self.arms {
            s.push_str(&format!("{:?} weights: c = {:e} (accuracy {:.4})\n", arm.weights, arm.c, arm.mean_accuracy));
            for t in &arm.trends {
                s.push_str(&format!(
                    "  T[x{} = {}]: {:+.4} -> {:+.4}{}\n",
                    t.variable,
                    t.value,
                    t.baseline_trend,
                    t.trend,
                    if t.reversed { "  REVERSED" } else { "" }
                ));
            }
        }
        s
    }
}

fn sign(v: f64) -> i8 {
    if v > ZERO {
        1
    } else if v < -ZERO {
        -1
    } else {
        0
    }
}

/// Cross-validates `c` under uniform and balanced weights and compares the
/// trends at the chosen `c` with the unweighted fit at the smallest grid
/// value. Folds are seeded by `spec.seed`.
pub fn run_cv_demo(spec: &ExperimentSpec, ds: &Dataset) -> Result<CvDemoReport> {
    spec.expect_kind(ExperimentKind::CvDemo)?;
    let stratifier = match spec.conditioning[0] {
        1 => Stratifier::X1,
        _ => Stratifier::X2,
    };
    let simpson = simpson_verdict_within(&ds.decode()?, stratifier)?;
    let labels = ds.labels();
    let scan_opts = ScanOptions { conditioning: spec.conditioning.clone(), ..ScanOptions::default() };
    let baseline = scan_pathological_logistic(ds, &spec.grid, &SampleWeights::uniform(ds.n()), &scan_opts)?;
    if !baseline.baseline_converged {
        return Err(Error::DegenerateDataset("the baseline fit did not converge".into()));
    }

    let mut arms = Vec::new();
    for weights in [WeightScheme::Uniform, WeightScheme::Balanced] {
        let cv = fit_logistic_cv(
            ds,
            &spec.grid,
            &CvOptions { k: spec.folds, weights, seed: spec.seed, fit: FitOptions::default() },
        )?;
        let scan = match weights {
            WeightScheme::Uniform => baseline.clone(),
            WeightScheme::Balanced => {
                scan_pathological_logistic(ds, &spec.grid, &SampleWeights::from_scheme(weights, &labels)?, &scan_opts)?
            }
        };
        let mut trends = Vec::new();
        for (cond, own) in baseline.conditions.iter().zip(&scan.conditions) {
            let trend = trend_indicator_logistic(&cv.model, cond.variable, cond.value)?;
            let s0 = sign(cond.baseline_trend);
            trends.push(TrendAtC {
                variable: cond.variable,
                value: cond.value,
                baseline_trend: cond.baseline_trend,
                trend,
                reversed: s0 != 0 && sign(trend) == -s0,
                in_regime: own.intervals.contains(cv.c),
            });
        }
        arms.push(CvArm { weights, c: cv.c, c_index: cv.c_index, mean_accuracy: cv.mean_scores[cv.c_index], trends, scan });
    }
    Ok(CvDemoReport {
        simpson,
        baseline_c: spec.grid.first(),
        folds: spec.folds,
        seed: spec.seed,
        reversal: arms.iter().any(|a| a.trends.iter().any(|t| t.reversed)),
        arms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{fixtures, ContingencyTable222};

    fn demo(ds: &Dataset, seed: u64) -> CvDemoReport {
        run_cv_demo(&ExperimentSpec::new(ExperimentKind::CvDemo, seed), ds).unwrap()
    }

    #[test]
    fn fixture_reverses_under_cross_validation() {
        let r = demo(&fixtures::pathological_default().encode().unwrap(), 0);
        assert!(r.simpson.is_simpson());
        assert!(r.reversal);
        for arm in &r.arms {
            for t in &arm.trends {
                assert!(t.baseline_trend < 0.0 && t.trend > 0.0, "{:?}", t);
                assert!(t.in_regime);
            }
        }
        let csv = r.results_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("weights,c,"));
    }

    #[test]
    fn non_pathological_table_has_no_reversal() {
        // Outcome depends on x1 only; x2 is balanced within each x1 level.
        let t = ContingencyTable222::from_fn(|y, a, _| [[30, 10], [10, 30]][y][a]);
        let r = demo(&t.encode().unwrap(), 1);
        assert!(!r.reversal);
        for arm in &r.arms {
            assert!(!arm.scan.pathological);
        }
    }
}
