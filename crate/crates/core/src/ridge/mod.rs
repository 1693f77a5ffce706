//! Ridge regression on binary data: closed-form estimates, regularization
//! paths, trend indicators and pathological regimes.
//!
//! For `p = 2` the estimate has the explicit form
//! `beta_i(c) = (c * sy_i - K_i) / D(c)` with
//! `K_i = s12 * sy_o - s_oo * sy_i` (`o` the other index) and
//! `D(c) = c^2 + c (s11 + s22) + s11 s22 - s12^2`.
//!
//! Variables are numbered from 1. For `p = 2` the trend indicator of
//! variable `i` (holding `X_i` fixed) is `-beta_o`; for `p > 2` it is
//! `-beta_i`.

mod path;
mod regime;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_traits::{Num, Signed};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::regime::{Endpoint, Rational};
use crate::tables::Dataset;

pub use path::{sign_of, ClosedFormPath, PathEval, SpectralPath};
pub use regime::{
    exact_gamma, exact_regimes, pathological_regime_exact, pathological_regime_numeric, scan_coefficient, scan_regimes,
    trend_curve, RegimeFlag, RegimeReport, ScanOptions, TrendCurve, TrendPoint,
};

/// 0-based index of the coefficient whose negation is the trend indicator
/// of `variable`.
pub fn coefficient_index(variable: usize, p: usize) -> Result<usize> {
    if variable == 0 || variable > p || p < 2 {
        return Err(Error::IndexOutOfRange { index: variable, p });
    }
    Ok(if p == 2 { 2 - variable } else { variable - 1 })
}

/// Field bound satisfied by both `f64` and [`Rational`].
pub trait Scalar: Clone + Num + Signed + PartialOrd + std::fmt::Debug {}
impl<T: Clone + Num + Signed + PartialOrd + std::fmt::Debug> Scalar for T {}

/// The five sufficient statistics of a two-feature ridge fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeSummary<T> {
    pub s12: T,
    pub s11: T,
    pub s22: T,
    pub sy1: T,
    pub sy2: T,
}

impl<T: Scalar> RidgeSummary<T> {
    pub fn s_diag(&self, m: usize) -> T {
        if m == 0 {
            self.s11.clone()
        } else {
            self.s22.clone()
        }
    }

    pub fn sy(&self, m: usize) -> T {
        if m == 0 {
            self.sy1.clone()
        } else {
            self.sy2.clone()
        }
    }

    /// `D(c)`.
    pub fn det(&self, c: T) -> T {
        (self.s11.clone() * self.s22.clone() - self.s12.clone() * self.s12.clone())
            + c.clone() * (c + self.s11.clone() + self.s22.clone())
    }

    /// `K_m` for the 0-based coefficient `m`.
    pub fn offset(&self, m: usize) -> T {
        let o = 1 - m;
        self.s12.clone() * self.sy(o) - self.s_diag(o) * self.sy(m)
    }

    /// `beta(c)`; requires `D(c) != 0`, which holds for every `c > 0`.
    pub fn beta(&self, c: T) -> [T; 2] {
        let d = self.det(c.clone());
        [0, 1].map(|m| (c.clone() * self.sy(m) - self.offset(m)) / d.clone())
    }

    /// `true` when the two columns are collinear (`D(0) = 0`).
    pub fn is_degenerate(&self) -> bool {
        self.det(T::zero()).is_zero()
    }

    /// The `c -> 0` limit of the path: least squares, or its minimum-norm
    /// version when the design is degenerate.
    pub fn limit(&self) -> [T; 2] {
        if !self.is_degenerate() {
            return self.beta(T::zero());
        }
        // Collinear columns force K = 0, so beta(c) = sy / (c + s11 + s22).
        let t = self.s11.clone() + self.s22.clone();
        if t.is_zero() {
            return [T::zero(), T::zero()];
        }
        [0, 1].map(|m| self.sy(m) / t.clone())
    }

    /// Left end of the region where `beta_m` has the opposite sign to its
    /// `c -> 0` limit, or `None` when the path has no positive zero.
    pub fn gamma(&self, m: usize) -> Option<T> {
        let k = self.offset(m);
        let sy = self.sy(m);
        if (k.clone() * sy.clone()).is_positive() {
            Some(k / sy)
        } else {
            None
        }
    }
}

impl RidgeSummary<Rational> {
    pub fn to_f64(&self) -> RidgeSummary<f64> {
        let f = crate::regime::rational_to_f64;
        RidgeSummary { s12: f(&self.s12), s11: f(&self.s11), s22: f(&self.s22), sy1: f(&self.sy1), sy2: f(&self.sy2) }
    }
}

/// Integer-scaled Gram matrix and moment vector of an integral design.
///
/// The true (possibly centered) Gram matrix is `gram / scale` and the
/// moment vector `xty / scale`; `scale` is `N` with intercept and 1 without.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactGram {
    p: usize,
    gram: Vec<i128>,
    xty: Vec<i128>,
    scale: i128,
}

impl ExactGram {
    const MAX_ENTRY: f64 = 1_048_576.0;
    const MAX_ROWS: usize = 1_000_000;

    /// `None` unless every entry is a small integer, so that all later
    /// products stay within `i128`.
    pub fn from_dataset(ds: &Dataset, with_intercept: bool) -> Option<Self> {
        if !ds.is_integral() || ds.n() > Self::MAX_ROWS {
            return None;
        }
        if ds.y().iter().chain(ds.x().iter()).any(|v| v.abs() > Self::MAX_ENTRY) {
            return None;
        }
        let (n, p) = (ds.n(), ds.p());
        let x: Vec<i128> = (0..n).flat_map(|r| (0..p).map(move |c| (r, c))).map(|(r, c)| ds.x()[(r, c)] as i128).collect();
        let y: Vec<i128> = ds.y().iter().map(|v| *v as i128).collect();
        let mut gram = vec![0i128; p * p];
        let mut xty = vec![0i128; p];
        let mut sx = vec![0i128; p];
        let sy: i128 = y.iter().sum();
        for r in 0..n {
            let row = &x[r * p..(r + 1) * p];
            for i in 0..p {
                sx[i] += row[i];
                xty[i] += row[i] * y[r];
                for j in 0..p {
                    gram[i * p + j] += row[i] * row[j];
                }
            }
        }
        if !with_intercept {
            return Some(Self { p, gram, xty, scale: 1 });
        }
        let nn = n as i128;
        for i in 0..p {
            xty[i] = nn.checked_mul(xty[i])?.checked_sub(sx[i].checked_mul(sy)?)?;
            for j in 0..p {
                gram[i * p + j] = nn.checked_mul(gram[i * p + j])?.checked_sub(sx[i].checked_mul(sx[j])?)?;
            }
        }
        Some(Self { p, gram, xty, scale: nn })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn scale(&self) -> i128 {
        self.scale
    }

    pub fn gram(&self, i: usize, j: usize) -> i128 {
        self.gram[i * self.p + j]
    }

    pub fn xty(&self, i: usize) -> i128 {
        self.xty[i]
    }

    pub fn summary(&self) -> Option<RidgeSummary<Rational>> {
        if self.p != 2 {
            return None;
        }
        let r = |v: i128| Rational::new(v, self.scale);
        Some(RidgeSummary {
            s12: r(self.gram(0, 1)),
            s11: r(self.gram(0, 0)),
            s22: r(self.gram(1, 1)),
            sy1: r(self.xty(0)),
            sy2: r(self.xty(1)),
        })
    }

    /// `G^j b` for `j = 0..p` in scaled integers; stops early on overflow.
    pub fn krylov(&self) -> Vec<Vec<i128>> {
        let mut out = vec![self.xty.clone()];
        while out.len() < self.p {
            let v = out.last().expect("non-empty");
            let next: Option<Vec<i128>> = (0..self.p)
                .map(|i| {
                    (0..self.p).try_fold(0i128, |acc, k| acc.checked_add(self.gram(i, k).checked_mul(v[k])?))
                })
                .collect();
            match next {
                Some(nv) => out.push(nv),
                None => break,
            }
        }
        out
    }
}

/// A fitted ridge model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeEstimate {
    pub beta: Vec<f64>,
    /// `y` mean for fits with intercept (the design is centered).
    pub intercept: Option<f64>,
    pub c: f64,
}

/// `c -> 0` trend of one variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrueTrend {
    pub variable: usize,
    pub trend: Endpoint,
    pub degenerate_design: bool,
}

impl TrueTrend {
    pub fn value(&self) -> f64 {
        self.trend.value()
    }
}

/// Ridge problem with cached sufficient statistics.
#[derive(Debug, Clone)]
pub struct RidgeProblem {
    n: usize,
    p: usize,
    with_intercept: bool,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    y_mean: f64,
    exact: Option<ExactGram>,
}

impl RidgeProblem {
    pub fn new(ds: &Dataset, with_intercept: bool) -> Self {
        let (n, p) = (ds.n(), ds.p());
        let exact = ExactGram::from_dataset(ds, with_intercept);
        let y_mean = ds.y().mean();
        let (gram, xty) = match &exact {
            Some(e) => {
                let s = e.scale as f64;
                (DMatrix::from_fn(p, p, |i, j| e.gram(i, j) as f64 / s), DVector::from_fn(p, |i, _| e.xty(i) as f64 / s))
            }
            None => {
                let mut x = ds.x().clone();
                if with_intercept {
                    for mut col in x.column_iter_mut() {
                        let m = col.mean();
                        col.add_scalar_mut(-m);
                    }
                }
                (x.transpose() * &x, x.transpose() * ds.y())
            }
        };
        Self { n, p, with_intercept, gram, xty, y_mean, exact }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn with_intercept(&self) -> bool {
        self.with_intercept
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    pub fn exact(&self) -> Option<&ExactGram> {
        self.exact.as_ref()
    }

    fn require_p2(&self) -> Result<()> {
        if self.p != 2 {
            return Err(Error::WrongShape(format!("closed form needs 2 features, dataset has {}", self.p)));
        }
        Ok(())
    }

    pub fn summary(&self) -> Result<RidgeSummary<f64>> {
        self.require_p2()?;
        Ok(RidgeSummary {
            s12: self.gram[(0, 1)],
            s11: self.gram[(0, 0)],
            s22: self.gram[(1, 1)],
            sy1: self.xty[0],
            sy2: self.xty[1],
        })
    }

    /// Exact statistics, available for integral two-feature data.
    pub fn summary_exact(&self) -> Option<RidgeSummary<Rational>> {
        self.exact.as_ref().and_then(ExactGram::summary)
    }

    fn check_c(c: f64) -> Result<()> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("regularization parameter must be positive, got {c}")));
        }
        Ok(())
    }

    fn estimate(&self, beta: Vec<f64>, c: f64) -> RidgeEstimate {
        RidgeEstimate { beta, intercept: self.with_intercept.then_some(self.y_mean), c }
    }

    /// Closed form for `p = 2`, Cholesky solve otherwise.
    pub fn fit(&self, c: f64) -> Result<RidgeEstimate> {
        if self.p == 2 {
            self.fit_closed_form(c)
        } else {
            self.fit_cholesky(c)
        }
    }

    pub fn fit_closed_form(&self, c: f64) -> Result<RidgeEstimate> {
        Self::check_c(c)?;
        let beta = self.summary()?.beta(c);
        Ok(self.estimate(beta.to_vec(), c))
    }

    /// Solves `(G + c I) beta = X^T y` by Cholesky factorization.
    pub fn fit_cholesky(&self, c: f64) -> Result<RidgeEstimate> {
        Self::check_c(c)?;
        let a = &self.gram + DMatrix::identity(self.p, self.p) * c;
        let chol = Cholesky::new(a)
            .ok_or_else(|| Error::DegenerateDataset(format!("ridge system not positive definite at c = {c}")))?;
        let beta = chol.solve(&self.xty);
        Ok(self.estimate(beta.iter().copied().collect(), c))
    }

    pub fn spectral(&self) -> SpectralPath {
        SpectralPath::new(&self.gram, &self.xty, self.exact.as_ref())
    }

    /// Path evaluator: the closed form for `p = 2`, the spectral form otherwise.
    pub fn path(&self) -> Box<dyn PathEval + Send + Sync> {
        match self.summary() {
            Ok(s) => Box::new(ClosedFormPath::new(s, self.summary_exact())),
            Err(_) => Box::new(self.spectral()),
        }
    }

    /// `true` when `X^T X` (centered with intercept) is singular.
    pub fn is_degenerate(&self) -> bool {
        match (self.summary_exact(), self.summary()) {
            (Some(s), _) => s.is_degenerate(),
            (None, Ok(s)) => s.det(0.0).abs() <= 1e-12 * (s.s11 * s.s22 + s.s12 * s.s12).max(f64::MIN_POSITIVE),
            (None, Err(_)) => self.spectral().is_singular(),
        }
    }

    /// Least-squares (minimum-norm) limit of the path.
    pub fn mls(&self) -> Vec<f64> {
        if let Some(s) = self.summary_exact() {
            return s.limit().iter().map(crate::regime::rational_to_f64).collect();
        }
        let path = self.path();
        (0..self.p).map(|m| path.limit(m).0).collect()
    }

    pub fn true_trend(&self, variable: usize) -> Result<TrueTrend> {
        let m = coefficient_index(variable, self.p)?;
        let degenerate_design = self.is_degenerate();
        let trend = match self.summary_exact() {
            Some(s) => Endpoint::exact(-s.limit()[m]),
            None => Endpoint::approx(-self.path().limit(m).0),
        };
        Ok(TrueTrend { variable, trend, degenerate_design })
    }
}

pub fn fit(ds: &Dataset, c: f64, with_intercept: bool) -> Result<RidgeEstimate> {
    RidgeProblem::new(ds, with_intercept).fit(c)
}

pub fn true_trend(ds: &Dataset, variable: usize, with_intercept: bool) -> Result<TrueTrend> {
    RidgeProblem::new(ds, with_intercept).true_trend(variable)
}

/// `T_i(c)`: `-beta_o` for two features, `-beta_i` otherwise.
pub fn trend_indicator(est: &RidgeEstimate, variable: usize) -> Result<f64> {
    let m = coefficient_index(variable, est.beta.len())?;
    Ok(-est.beta[m])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{fixtures, ContingencyTable222};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn loan() -> RidgeProblem {
        RidgeProblem::new(&fixtures::loan().encode().unwrap(), false)
    }

    #[test]
    fn loan_summary() {
        let s = loan().summary_exact().unwrap();
        assert_eq!((s.s12, s.s11, s.s22, s.sy1, s.sy2), (r(35, 1), r(56, 1), r(59, 1), r(13, 1), r(22, 1)));
        assert_eq!(s.det(r(0, 1)), r(2079, 1));
    }

    #[test]
    fn loan_estimates() {
        let s = loan().summary_exact().unwrap();
        assert_eq!(s.beta(r(5, 1)), [r(62, 2679), r(887, 2679)]);
        assert_eq!(s.limit(), [r(-3, 2079), r(777, 2079)]);
        let est = loan().fit(5.0).unwrap();
        assert_relative_eq!(est.beta[0], 62.0 / 2679.0, max_relative = 1e-12);
        assert_relative_eq!(trend_indicator(&est, 2).unwrap(), -62.0 / 2679.0, max_relative = 1e-12);
        let tt = loan().true_trend(2).unwrap();
        assert_eq!(tt.trend.as_exact(), Some(&r(3, 2079)));
        assert!(!tt.degenerate_design);
    }

    #[test]
    fn identity_gram() {
        // One-hot rows: X^T X = I.
        let ds = Dataset::from_rows(&[1, 0], &[vec![1, 0], vec![0, 1]]).unwrap();
        let p = RidgeProblem::new(&ds, false);
        for c in [0.1, 1.0, 7.0] {
            let est = p.fit(c).unwrap();
            assert_relative_eq!(est.beta[0], 1.0 / (1.0 + c), max_relative = 1e-14);
            assert_eq!(est.beta[1], 0.0);
        }
    }

    #[test]
    fn identical_columns_give_equal_min_norm_trends() {
        let ds = Dataset::from_rows(&[1, 0, 1, 1], &[vec![1, 1], vec![0, 0], vec![1, 1], vec![0, 0]]).unwrap();
        let p = RidgeProblem::new(&ds, false);
        assert!(p.is_degenerate());
        let (t1, t2) = (p.true_trend(1).unwrap(), p.true_trend(2).unwrap());
        assert!(t1.degenerate_design);
        assert_eq!(t1.trend.as_exact(), t2.trend.as_exact());
        assert_eq!(t1.trend.as_exact(), Some(&r(-1, 2)));
        // Cross-check against the path at a tiny c.
        let est = p.fit(1e-10).unwrap();
        assert_relative_eq!(est.beta[0], 0.5, max_relative = 1e-9);
    }

    #[test]
    fn zero_beta_gives_zero_trends() {
        let est = RidgeEstimate { beta: vec![0.0, 0.0], intercept: None, c: 1.0 };
        assert_eq!(trend_indicator(&est, 1).unwrap(), 0.0);
        assert_eq!(trend_indicator(&est, 2).unwrap(), 0.0);
        assert!(matches!(trend_indicator(&est, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn intercept_fit_uses_centered_design() {
        let ds = fixtures::loan().encode().unwrap();
        let p = RidgeProblem::new(&ds, true);
        let est = p.fit(2.0).unwrap();
        assert_relative_eq!(est.intercept.unwrap(), 42.0 / 110.0, max_relative = 1e-14);
        // Centered design built by hand.
        let mut x = ds.x().clone();
        for mut col in x.column_iter_mut() {
            let m = col.mean();
            col.add_scalar_mut(-m);
        }
        let a = x.transpose() * &x + DMatrix::identity(2, 2) * 2.0;
        let beta = a.lu().solve(&(x.transpose() * ds.y())).unwrap();
        assert_relative_eq!(est.beta[0], beta[0], max_relative = 1e-10);
        assert_relative_eq!(est.beta[1], beta[1], max_relative = 1e-10);
        assert_relative_eq!(trend_indicator(&est, 1).unwrap(), -beta[1], max_relative = 1e-10);
    }

    #[test]
    fn rejects_non_positive_c() {
        assert!(loan().fit(0.0).is_err());
        assert!(loan().fit(f64::NAN).is_err());
    }

    fn table_strategy() -> impl Strategy<Value = ContingencyTable222> {
        prop::array::uniform8(0u64..60)
            .prop_filter("non-empty", |c| c.iter().sum::<u64>() > 0)
            .prop_map(ContingencyTable222::from_canonical)
    }

    proptest! {
        #[test]
        fn closed_form_matches_cholesky(t in table_strategy(), c in 1e-4f64..1e4, icpt in any::<bool>()) {
            let p = RidgeProblem::new(&t.encode().unwrap(), icpt);
            let a = p.fit_closed_form(c).unwrap();
            let b = p.fit_cholesky(c).unwrap();
            for m in 0..2 {
                let scale = a.beta[m].abs().max(b.beta[m].abs()).max(1e-300);
                prop_assert!((a.beta[m] - b.beta[m]).abs() <= 1e-10 * scale + 1e-14, "{:?} vs {:?}", a.beta, b.beta);
            }
        }

        #[test]
        fn exact_path_matches_float(t in table_strategy(), c in 1u32..1000) {
            let p = RidgeProblem::new(&t.encode().unwrap(), false);
            let e = p.summary_exact().unwrap().beta(Rational::from_integer(i128::from(c)));
            let f = p.fit(f64::from(c)).unwrap();
            for m in 0..2 {
                prop_assert!((crate::regime::rational_to_f64(&e[m]) - f.beta[m]).abs() <= 1e-12);
            }
        }

        #[test]
        fn cauchy_schwarz(t in table_strategy()) {
            let s = RidgeProblem::new(&t.encode().unwrap(), false).summary_exact().unwrap();
            prop_assert!(s.s12 * s.s12 <= s.s11 * s.s22);
        }
    }
}
