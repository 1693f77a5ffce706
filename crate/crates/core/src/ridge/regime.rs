//! Pathological regimes of ridge paths, exact and by grid scan.

use serde::Serialize;

use super::path::PathEval;
use super::{coefficient_index, RidgeProblem, RidgeSummary, Scalar};
use crate::error::{Error, Result};
use crate::grid::RegGrid;
use crate::regime::{rational_to_f64, Endpoint, Interval, Rational, Regime};
use crate::tables::Dataset;

/// Expansion beyond the grid stops at these magnitudes.
const C_MAX: f64 = 1e150;
const C_MIN: f64 = 1e-150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeFlag {
    /// The Gram matrix is singular; the true trend is the minimum-norm limit.
    DegenerateDesign,
    /// `sy = 0` while `K > 0`: the path keeps one sign, no reversal.
    DegenerateTrueTrend,
    /// The `c -> 0` trend is zero, so no reversal is defined.
    ZeroTrueTrend,
    /// The scan disagrees with the number of path zeros.
    GridTooCoarse,
    /// Sums could not be formed exactly; floating-point criterion used.
    Inexact,
}

/// Pathological regime of one variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub variable: usize,
    /// 1-based index of the coefficient whose sign is tracked.
    pub coefficient: usize,
    pub intervals: Regime,
    pub gamma: Option<Endpoint>,
    pub gamma_float: Option<f64>,
    pub true_trend: f64,
    pub flags: Vec<RegimeFlag>,
}

impl RegimeReport {
    pub fn is_pathological(&self) -> bool {
        !self.intervals.is_empty()
    }

    fn new(variable: usize, m: usize, intervals: Regime, true_trend: f64, flags: Vec<RegimeFlag>) -> Self {
        let gamma = intervals.infimum().cloned();
        let gamma_float = gamma.as_ref().map(Endpoint::value);
        Self { variable, coefficient: m + 1, intervals, gamma, gamma_float, true_trend, flags }
    }
}

fn regime_from_gamma<T: Scalar>(s: &RidgeSummary<T>, m: usize, to_endpoint: impl Fn(T) -> Endpoint) -> (Regime, Vec<RegimeFlag>) {
    let mut flags = Vec::new();
    if s.is_degenerate() {
        flags.push(RegimeFlag::DegenerateDesign);
    }
    if s.sy(m).is_zero() && s.offset(m).is_positive() {
        flags.push(RegimeFlag::DegenerateTrueTrend);
    }
    if s.limit()[m].is_zero() {
        flags.push(RegimeFlag::ZeroTrueTrend);
    }
    let regime = match s.gamma(m) {
        Some(g) => Regime::unbounded_from(to_endpoint(g)),
        None => Regime::empty(),
    };
    (regime, flags)
}

/// Closed-form regimes for both variables of a two-feature problem: the
/// regime of variable `i` is `(gamma, inf)` with `gamma = K_o / sy_o` when
/// `K_o * sy_o > 0` (`o` the other index), and empty otherwise.
pub fn exact_regimes(problem: &RidgeProblem) -> Result<Vec<RegimeReport>> {
    let sf = problem.summary()?;
    let exact = problem.summary_exact();
    (1..=2)
        .map(|variable| {
            let m = coefficient_index(variable, 2)?;
            let (regime, flags, tt) = match &exact {
                Some(s) => {
                    let (r, f) = regime_from_gamma(s, m, Endpoint::exact);
                    (r, f, -rational_to_f64(&s.limit()[m]))
                }
                None => {
                    let (r, mut f) = regime_from_gamma(&sf, m, Endpoint::approx);
                    f.push(RegimeFlag::Inexact);
                    (r, f, -sf.limit()[m])
                }
            };
            Ok(RegimeReport::new(variable, m, regime, tt, flags))
        })
        .collect()
}

pub fn pathological_regime_exact(ds: &Dataset, with_intercept: bool) -> Result<Vec<RegimeReport>> {
    exact_regimes(&RidgeProblem::new(ds, with_intercept))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Relative width at which endpoint bisection stops.
    pub rel_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10 }
    }
}

/// Geometric bisection for the sign boundary in `(lo, hi)`, where
/// `reversed(lo) != reversed(hi)`.
fn bisect(reversed: &impl Fn(f64) -> bool, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let at_lo = reversed(lo);
    while hi / lo - 1.0 > rel_tol {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if reversed(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// Left end of a reversed run that starts at the first grid point.
fn search_left(reversed: &impl Fn(f64) -> bool, start: f64, rel_tol: f64) -> Endpoint {
    let mut hi = start;
    let mut c = start / 2.0;
    while c > C_MIN {
        if !reversed(c) {
            return Endpoint::approx(bisect(reversed, c, hi, rel_tol));
        }
        hi = c;
        c /= 2.0;
    }
    Endpoint::approx(0.0)
}

/// First point past `start` where `reversed` equals `target`.
fn search_right(reversed: &impl Fn(f64) -> bool, start: f64, target: bool, rel_tol: f64) -> Option<f64> {
    let mut lo = start;
    let mut c = start * 2.0;
    while c < C_MAX {
        if reversed(c) == target {
            return Some(bisect(reversed, lo, c, rel_tol));
        }
        lo = c;
        c *= 2.0;
    }
    None
}

/// Regime of coefficient `m` (0-based) of `path`: the set of `c` where
/// `beta_m(c)` has the strictly opposite sign to its `c -> 0` limit.
///
/// Runs of reversed grid points are refined by bisection. A run reaching the
/// last grid point is unbounded if the large-`c` sign is reversed, otherwise
/// its end is searched for beyond the grid. A reversal that only begins past
/// the grid is detected from the large-`c` sign.
pub fn scan_coefficient(path: &dyn PathEval, m: usize, grid: &RegGrid, opts: ScanOptions) -> Regime {
    let s0 = path.limit_sign(m);
    if s0 == 0 {
        return Regime::empty();
    }
    let reversed = |c: f64| path.sign_at(m, c) == -s0;
    let g = grid.values();
    let flags: Vec<bool> = g.iter().map(|&c| reversed(c)).collect();
    let asym_reversed = path.asymptotic_sign(m) == -s0;
    let last = g.len() - 1;

    let mut intervals = Vec::new();
    let mut i = 0;
    while i < g.len() {
        if !flags[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < g.len() && flags[j + 1] {
            j += 1;
        }
        let lo = if i == 0 {
            search_left(&reversed, g[0], opts.rel_tol)
        } else {
            Endpoint::approx(bisect(&reversed, g[i - 1], g[i], opts.rel_tol))
        };
        let hi = if j < last {
            Some(Endpoint::approx(bisect(&reversed, g[j], g[j + 1], opts.rel_tol)))
        } else if asym_reversed {
            None
        } else {
            search_right(&reversed, g[last], false, opts.rel_tol).map(Endpoint::approx)
        };
        intervals.push(Interval::new(lo, hi));
        i = j + 1;
    }
    if !flags[last] && asym_reversed {
        if let Some(lo) = search_right(&reversed, g[last], true, opts.rel_tol) {
            intervals.push(Interval::unbounded(Endpoint::approx(lo)));
        }
    }
    Regime::from_intervals(intervals)
}

/// Numeric regimes for every variable. Two-feature problems use the closed
/// form path, larger ones the spectral form.
pub fn scan_regimes(problem: &RidgeProblem, grid: &RegGrid, opts: ScanOptions) -> Result<Vec<RegimeReport>> {
    let p = problem.p();
    if p < 2 {
        return Err(Error::WrongShape(format!("need at least 2 features, dataset has {p}")));
    }
    let path = problem.path();
    let degenerate = problem.is_degenerate();
    let exact = if p == 2 { Some(exact_regimes(problem)?) } else { None };
    (1..=p)
        .map(|variable| {
            let m = coefficient_index(variable, p)?;
            let regime = scan_coefficient(path.as_ref(), m, grid, opts);
            let mut flags = Vec::new();
            if degenerate {
                flags.push(RegimeFlag::DegenerateDesign);
            }
            if path.limit_sign(m) == 0 {
                flags.push(RegimeFlag::ZeroTrueTrend);
            }
            if let Some(ex) = &exact {
                // The two-feature path has at most one positive zero.
                let ex = &ex[variable - 1];
                let zeros = regime
                    .intervals()
                    .iter()
                    .map(|iv| usize::from(iv.lo.value() > 0.0) + usize::from(iv.is_bounded()))
                    .sum::<usize>();
                if zeros != usize::from(ex.is_pathological()) {
                    flags.push(RegimeFlag::GridTooCoarse);
                }
            }
            Ok(RegimeReport::new(variable, m, regime, -path.limit(m).0, flags))
        })
        .collect()
}

pub fn pathological_regime_numeric(ds: &Dataset, grid: &RegGrid, with_intercept: bool) -> Result<Vec<RegimeReport>> {
    scan_regimes(&RidgeProblem::new(ds, with_intercept), grid, ScanOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendPoint {
    pub c: f64,
    pub trend: f64,
}

/// Samples of `T_i(c)` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendCurve {
    pub variable: usize,
    pub points: Vec<TrendPoint>,
    pub true_trend: f64,
}

impl TrendCurve {
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("c,trend\n");
        for pt in &self.points {
            s.push_str(&format!("{:e},{:e}\n", pt.c, pt.trend));
        }
        s
    }

    /// Grid points between which the sampled trend changes sign.
    pub fn sign_changes(&self) -> Vec<(f64, f64)> {
        self.points
            .windows(2)
            .filter(|w| w[0].trend.signum() * w[1].trend.signum() < 0.0)
            .map(|w| (w[0].c, w[1].c))
            .collect()
    }
}

pub fn trend_curve(ds: &Dataset, variable: usize, grid: &RegGrid, with_intercept: bool) -> Result<TrendCurve> {
    let problem = RidgeProblem::new(ds, with_intercept);
    let m = coefficient_index(variable, problem.p())?;
    let path = problem.path();
    let points = grid.values().iter().map(|&c| TrendPoint { c, trend: -path.coef(m, c).0 }).collect();
    Ok(TrendCurve { variable, points, true_trend: -path.limit(m).0 })
}

/// Exact left endpoint of the regime of `variable`, if any.
pub fn exact_gamma(problem: &RidgeProblem, variable: usize) -> Option<Rational> {
    let m = coefficient_index(variable, 2).ok()?;
    problem.summary_exact()?.gamma(m)
}
