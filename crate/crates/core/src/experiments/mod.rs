//! Monte-Carlo drivers: pathological ratios against sample size, the mean
//! regime boundary of pathological ridge tables, logistic ratios for Simpson
//! and non-Simpson tables, and a cross-validation demonstration.
//!
//! Every run is a pure function of its [`ExperimentSpec`]. Datasets are drawn
//! from per-item streams and evaluated in parallel; aggregation only counts
//! and sums in item order, so `results.csv` does not depend on the thread
//! count.

mod cv_demo;
mod logistic;
mod output;
mod ridge;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RegGrid;
use crate::logistic::WeightScheme;
use crate::sampling::{Condition, Scheme, DEFAULT_MAX_REJECTS};
use crate::tables::Dataset;

pub use cv_demo::{run_cv_demo, CvArm, CvDemoReport, TrendAtC};
pub use logistic::run_logistic_ratio_experiment;
pub use output::{timestamp_now, write_run};
pub use ridge::{run_avg_gamma_experiment, run_ridge_ratio_experiment, GammaRow};
pub use stats::{MeanEstimate, RatioEstimate, WILSON_Z};

/// Minimum number of pathological tables needed for a mean boundary.
pub const MIN_PATHOLOGICAL_DRAWS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RatioVsN,
    AvgGammaVsN,
    LogisticRatios,
    CvDemo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::RatioVsN => "ratio_vs_n",
            Self::AvgGammaVsN => "avg_gamma_vs_n",
            Self::LogisticRatios => "logistic_ratios",
            Self::CvDemo => "cv_demo",
        }
    }

    /// Directory name under the output root.
    pub fn dir_name(self) -> &'static str {
        match self {
            Self::RatioVsN => "ratio-vs-n",
            Self::AvgGammaVsN => "avg-gamma",
            Self::LogisticRatios => "logistic-ratios",
            Self::CvDemo => "cv-demo",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "ratio_vs_n" => Ok(Self::RatioVsN),
            "avg_gamma" | "avg_gamma_vs_n" => Ok(Self::AvgGammaVsN),
            "logistic_ratios" => Ok(Self::LogisticRatios),
            "cv_demo" => Ok(Self::CvDemo),
            _ => Err(Error::InvalidSpec(format!("unknown experiment `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub sizes: Vec<u64>,
    #[serde(rename = "M")]
    pub m: usize,
    pub scheme: Scheme,
    /// Table populations drawn at every size.
    pub conditions: Vec<Condition>,
    /// Ridge only: fit an unpenalized intercept.
    pub intercept: bool,
    /// Logistic ratios only: sample weighting of the scanned fits.
    pub weights: WeightScheme,
    /// Logistic only: conditioning variables of the scanned trends.
    pub conditioning: Vec<usize>,
    pub grid: RegGrid,
    /// Ridge only: grid scan instead of the exact criterion.
    pub numeric: bool,
    pub folds: usize,
    pub seed: u64,
    pub max_rejects: u64,
    /// Keep per-dataset verdicts in the summary.
    pub keep_verdicts: bool,
}

impl ExperimentSpec {
    /// Desk-scale defaults for `kind`.
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        let base = Self {
            kind,
            sizes: vec![50, 100, 200, 400, 800, 1600],
            m: 500,
            scheme: Scheme::UniformComposition,
            conditions: vec![Condition::Any, Condition::Simpson],
            intercept: false,
            weights: WeightScheme::Uniform,
            conditioning: vec![1, 2],
            grid: RegGrid::ridge_default(),
            numeric: false,
            folds: 5,
            seed,
            max_rejects: DEFAULT_MAX_REJECTS,
            keep_verdicts: false,
        };
        match kind {
            ExperimentKind::RatioVsN => base,
            ExperimentKind::AvgGammaVsN => {
                Self { sizes: vec![50, 100, 200, 400, 800], conditions: vec![Condition::Any], ..base }
            }
            ExperimentKind::LogisticRatios => Self {
                sizes: vec![200],
                m: 100,
                scheme: Scheme::DirichletRounded,
                conditions: vec![Condition::Simpson, Condition::NonSimpson],
                conditioning: vec![1],
                grid: RegGrid::logistic_default(),
                ..base
            },
            ExperimentKind::CvDemo => Self {
                sizes: Vec::new(),
                m: 1,
                conditions: Vec::new(),
                conditioning: vec![2],
                grid: RegGrid::logistic_default(),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.m == 0 {
            return bad("M must be at least 1".into());
        }
        if self.kind != ExperimentKind::CvDemo {
            if self.sizes.is_empty() {
                return bad("no sample sizes given".into());
            }
            if self.sizes.contains(&0) {
                return bad("sample sizes must be at least 1".into());
            }
            if self.conditions.is_empty() {
                return bad("no table population given".into());
            }
        }
        if self.max_rejects == 0 {
            return bad("max_rejects must be at least 1".into());
        }
        if matches!(self.kind, ExperimentKind::LogisticRatios | ExperimentKind::CvDemo) {
            if self.conditioning.is_empty() || self.conditioning.iter().any(|i| !(1..=2).contains(i)) {
                return bad(format!("conditioning variables must be 1 or 2, got {:?}", self.conditioning));
            }
        }
        if self.kind == ExperimentKind::CvDemo && self.folds < 2 {
            return bad("need at least 2 folds".into());
        }
        Ok(())
    }

    fn expect_kind(&self, kind: ExperimentKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::InvalidSpec(format!("expected a {kind} spec, got {}", self.kind)));
        }
        self.validate()
    }
}

/// Pathological ratio of one table population at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub scheme: Scheme,
    pub condition: Condition,
    pub ratio: RatioEstimate,
    pub acceptance_rate: f64,
    /// Tables with a single response class; counted as not pathological.
    pub degenerate: usize,
    /// Logistic only: grid fits that did not converge, summed over tables.
    pub not_converged: usize,
}

impl RatioRow {
    fn csv_header() -> &'static str {
        "N,scheme,condition,M,pathological,ratio,wilson_lower,wilson_upper,acceptance_rate,degenerate,not_converged\n"
    }

    fn csv_line(&self) -> String {
        let r = &self.ratio;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            self.n,
            self.scheme,
            self.condition.name(),
            r.m,
            r.count,
            r.estimate,
            r.lower,
            r.upper,
            self.acceptance_rate,
            self.degenerate,
            self.not_converged
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentReport {
    Ratios(Vec<RatioRow>),
    Gamma(Vec<GammaRow>),
    CvDemo(CvDemoReport),
}

impl ExperimentReport {
    /// Deterministic CSV of the per-point results.
    pub fn results_csv(&self) -> String {
        match self {
            Self::Ratios(rows) => {
                let mut s = RatioRow::csv_header().to_string();
                rows.iter().for_each(|r| s.push_str(&r.csv_line()));
                s
            }
            Self::Gamma(rows) => {
                let mut s = GammaRow::csv_header().to_string();
                rows.iter().for_each(|r| s.push_str(&r.csv_line()));
                s
            }
            Self::CvDemo(r) => r.results_csv(),
        }
    }

    /// Plain-text table for terminals.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        match self {
            Self::Ratios(rows) => {
                s.push_str(&format!("{:>6} {:<20} {:<12} {:>6} {:>8} {:>19}\n", "N", "scheme", "tables", "M", "ratio", "95% interval"));
                for r in rows {
                    s.push_str(&format!(
                        "{:>6} {:<20} {:<12} {:>6} {:>8.4} [{:.4}, {:.4}]\n",
                        r.n,
                        r.scheme.name(),
                        r.condition.name(),
                        r.ratio.m,
                        r.ratio.estimate,
                        r.ratio.lower,
                        r.ratio.upper
                    ));
                }
            }
            Self::Gamma(rows) => {
                s.push_str(&format!("{:>6} {:>6} {:>12} {:>12} {:>25}\n", "N", "M", "pathological", "mean gamma", "95% interval"));
                for r in rows {
                    s.push_str(&format!(
                        "{:>6} {:>6} {:>12} {:>12.6} [{:.6}, {:.6}]\n",
                        r.n, r.m, r.gamma.count, r.gamma.mean, r.gamma.lower, r.gamma.upper
                    ));
                }
            }
            Self::CvDemo(r) => s.push_str(&r.summary_table()),
        }
        s
    }
}

/// Runs `spec`; `data` is required by, and only used by, the CV demo.
pub fn run_experiment(spec: &ExperimentSpec, data: Option<&Dataset>) -> Result<ExperimentReport> {
    match spec.kind {
        ExperimentKind::RatioVsN => run_ridge_ratio_experiment(spec).map(ExperimentReport::Ratios),
        ExperimentKind::AvgGammaVsN => run_avg_gamma_experiment(spec).map(ExperimentReport::Gamma),
        ExperimentKind::LogisticRatios => run_logistic_ratio_experiment(spec).map(ExperimentReport::Ratios),
        ExperimentKind::CvDemo => {
            let ds = data.ok_or_else(|| Error::InvalidSpec("the CV demo needs a dataset".into()))?;
            run_cv_demo(spec, ds).map(ExperimentReport::CvDemo)
        }
    }
}
