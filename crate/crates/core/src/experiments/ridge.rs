use rayon::prelude::*;
use serde::Serialize;

use super::stats::{MeanEstimate, RatioEstimate};
use super::{ExperimentKind, ExperimentSpec, RatioRow, MIN_PATHOLOGICAL_DRAWS};
use crate::error::{Error, Result};
use crate::ridge::{pathological_regime_exact, pathological_regime_numeric, RegimeReport};
use crate::sampling::{sample_batch, Batch, Condition, SamplerConfig, Scheme};
use crate::tables::ContingencyTable222;

/// Mean left boundary of pathological regimes at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub scheme: Scheme,
    #[serde(rename = "M")]
    pub m: usize,
    pub gamma: MeanEstimate,
}

impl GammaRow {
    pub(super) fn csv_header() -> &'static str {
        "N,scheme,M,pathological,mean_gamma,ci_lower,ci_upper\n"
    }

    pub(super) fn csv_line(&self) -> String {
        let g = &self.gamma;
        format!("{},{},{},{},{},{},{}\n", self.n, self.scheme, self.m, g.count, g.mean, g.lower, g.upper)
    }
}

pub(super) fn draw(spec: &ExperimentSpec, group: usize, n: u64, condition: Condition) -> Result<Batch> {
    let cfg = SamplerConfig::new(spec.scheme, n, spec.seed)?.with_max_rejects(spec.max_rejects)?;
    sample_batch(&cfg, spec.m, condition, group as u32)
}

fn reports(spec: &ExperimentSpec, t: &ContingencyTable222) -> Result<Vec<RegimeReport>> {
    let ds = t.encode()?;
    if spec.numeric {
        pathological_regime_numeric(&ds, &spec.grid, spec.intercept)
    } else {
        pathological_regime_exact(&ds, spec.intercept)
    }
}

/// Fraction of tables with a non-empty ridge regime, per size and population.
pub fn run_ridge_ratio_experiment(spec: &ExperimentSpec) -> Result<Vec<RatioRow>> {
    spec.expect_kind(ExperimentKind::RatioVsN)?;
    let mut rows = Vec::new();
    for (g, &n) in spec.sizes.iter().enumerate() {
        for &condition in &spec.conditions {
            let batch = draw(spec, g, n, condition)?;
            let verdicts: Vec<bool> = batch
                .tables
                .par_iter()
                .map(|t| Ok(reports(spec, t)?.iter().any(RegimeReport::is_pathological)))
                .collect::<Result<_>>()?;
            rows.push(RatioRow {
                n,
                scheme: spec.scheme,
                condition,
                ratio: RatioEstimate::from_verdicts(verdicts, spec.keep_verdicts),
                acceptance_rate: batch.acceptance_rate,
                degenerate: 0,
                not_converged: 0,
            });
        }
    }
    Ok(rows)
}

/// Mean of the smallest regime boundary over pathological tables. Tables
/// are drawn from the first population of the spec.
pub fn run_avg_gamma_experiment(spec: &ExperimentSpec) -> Result<Vec<GammaRow>> {
    spec.expect_kind(ExperimentKind::AvgGammaVsN)?;
    let mut rows = Vec::new();
    for (g, &n) in spec.sizes.iter().enumerate() {
        let batch = draw(spec, g, n, spec.conditions[0])?;
        let gammas: Vec<Option<f64>> = batch
            .tables
            .par_iter()
            .map(|t| {
                Ok(reports(spec, t)?
                    .iter()
                    .filter(|r| r.is_pathological())
                    .filter_map(|r| r.gamma_float)
                    .reduce(f64::min))
            })
            .collect::<Result<_>>()?;
        let values: Vec<f64> = gammas.into_iter().flatten().collect();
        if values.len() < MIN_PATHOLOGICAL_DRAWS {
            return Err(Error::InsufficientPathologicalDraws { n, found: values.len(), needed: MIN_PATHOLOGICAL_DRAWS });
        }
        rows.push(GammaRow { n, scheme: spec.scheme, m: spec.m, gamma: MeanEstimate::from_values(&values) });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regime::Rational;
    use crate::ridge::exact_regimes;
    use crate::ridge::RidgeProblem;
    use crate::tables::fixtures;

    fn spec(kind: ExperimentKind, sizes: Vec<u64>, m: usize) -> ExperimentSpec {
        ExperimentSpec { sizes, m, ..ExperimentSpec::new(kind, 7) }
    }

    #[test]
    fn loan_gamma() {
        let r = exact_regimes(&RidgeProblem::new(&fixtures::loan().encode().unwrap(), false)).unwrap();
        let g: Vec<_> = r.iter().filter(|r| r.is_pathological()).map(|r| r.gamma.clone().unwrap()).collect();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].as_exact(), Some(&Rational::new(3.into(), 13.into())));
    }

    #[test]
    fn ratio_runs_are_deterministic() {
        let s = spec(ExperimentKind::RatioVsN, vec![30, 60], 40);
        let a = run_ridge_ratio_experiment(&s).unwrap();
        assert_eq!(a, run_ridge_ratio_experiment(&s).unwrap());
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|r| r.ratio.m == 40));
        let other = run_ridge_ratio_experiment(&ExperimentSpec { seed: 8, ..s }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn numeric_scan_reproduces_exact_verdicts() {
        let mut s = spec(ExperimentKind::RatioVsN, vec![100], 500);
        s.keep_verdicts = true;
        let exact = run_ridge_ratio_experiment(&s).unwrap();
        s.numeric = true;
        let numeric = run_ridge_ratio_experiment(&s).unwrap();
        for (a, b) in exact.iter().zip(&numeric) {
            assert_eq!(a.ratio.verdicts, b.ratio.verdicts);
        }
    }

    #[test]
    fn bernoulli_ratio_decreases_with_n() {
        let mut s = spec(ExperimentKind::RatioVsN, vec![20, 100], 2000);
        s.scheme = Scheme::Bernoulli;
        s.conditions = vec![Condition::Any];
        let r = run_ridge_ratio_experiment(&s).unwrap();
        assert!(r[0].ratio.estimate > 0.0);
        assert!(r[1].ratio.estimate < r[0].ratio.estimate, "{:?}", r);
    }

    #[test]
    fn single_count_tables_match_enumeration() {
        // All 8 tables of size 1, evaluated directly.
        let pathological = (0..8)
            .filter(|&k| {
                let mut c = [0u64; 8];
                c[k] = 1;
                let ds = ContingencyTable222::from_canonical(c).encode().unwrap();
                pathological_regime_exact(&ds, false).unwrap().iter().any(RegimeReport::is_pathological)
            })
            .count();
        let s = spec(ExperimentKind::RatioVsN, vec![1], 800);
        let r = run_ridge_ratio_experiment(&ExperimentSpec { conditions: vec![Condition::Any], ..s }).unwrap();
        let expected = pathological as f64 / 8.0;
        assert!((r[0].ratio.estimate - expected).abs() <= 0.06, "{} vs {expected}", r[0].ratio.estimate);
        let g = run_avg_gamma_experiment(&spec(ExperimentKind::AvgGammaVsN, vec![1], 800));
        if pathological == 0 {
            assert!(matches!(g, Err(Error::InsufficientPathologicalDraws { n: 1, found: 0, needed: 30 })));
        }
    }

    #[test]
    fn too_few_pathological_tables_is_an_error() {
        let mut s = spec(ExperimentKind::AvgGammaVsN, vec![100], 20);
        s.scheme = Scheme::Bernoulli;
        assert!(matches!(run_avg_gamma_experiment(&s), Err(Error::InsufficientPathologicalDraws { .. })));
    }

    #[test]
    fn mean_gamma_grows_with_n() {
        let r = run_avg_gamma_experiment(&spec(ExperimentKind::AvgGammaVsN, vec![50, 400], 500)).unwrap();
        assert!(r[0].gamma.mean < r[1].gamma.mean, "{r:?}");
        assert!(r.iter().all(|g| g.gamma.count >= MIN_PATHOLOGICAL_DRAWS));
    }
}
