use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use super::weights::SampleWeights;
use crate::error::{Error, Result};
use crate::tables::{Dataset, Encoding};

/// Standard logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence threshold on the Euclidean norm of the gradient.
    pub tol: f64,
    /// Diagonal shift tried first when the Newton matrix fails to factor.
    pub jitter: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-8, jitter: 1e-12 }
    }
}

/// Distinct `(x, y)` combination with its total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub x: Vec<f64>,
    pub y: bool,
    pub weight: f64,
}

/// A fitted model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticModel {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub c: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub objective: f64,
    /// Objective after each accepted Newton step, starting from the initial point.
    #[serde(skip)]
    pub trace: Vec<f64>,
    #[serde(skip)]
    pub encoding: Encoding,
}

impl LogisticModel {
    /// `(beta0, beta_1, ..., beta_p)`.
    pub fn theta(&self) -> Vec<f64> {
        std::iter::once(self.beta0).chain(self.beta.iter().copied()).collect()
    }

    pub fn eta(&self, x: &[f64]) -> f64 {
        self.beta0 + self.beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.eta(x))
    }
}

/// Weighted logistic-regression data reduced to distinct patterns.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    p: usize,
    n: f64,
    patterns: Vec<Pattern>,
    encoding: Encoding,
}

impl LogisticProblem {
    pub fn new(ds: &Dataset, weights: &SampleWeights) -> Result<Self> {
        let idx: Vec<usize> = (0..ds.n()).collect();
        Self::from_rows(ds, &idx, weights)
    }

    /// Problem restricted to rows `idx`; `weights` is indexed by dataset row.
    pub fn from_rows(ds: &Dataset, idx: &[usize], weights: &SampleWeights) -> Result<Self> {
        if weights.len() != ds.n() {
            return Err(Error::WrongShape(format!("{} weights for {} rows", weights.len(), ds.n())));
        }
        let labels = ds.labels();
        let mut groups: BTreeMap<(Vec<u64>, bool), (Vec<f64>, f64)> = BTreeMap::new();
        for &r in idx {
            let x: Vec<f64> = ds.x().row(r).iter().copied().collect();
            let key = (x.iter().map(|v| v.to_bits()).collect(), labels[r]);
            groups.entry(key).or_insert_with(|| (x, 0.0)).1 += weights.values()[r];
        }
        let patterns: Vec<Pattern> =
            groups.into_iter().map(|((_, y), (x, weight))| Pattern { x, y, weight }).collect();
        let has = |class: bool| patterns.iter().any(|pt| pt.y == class);
        if !(has(true) && has(false)) {
            return Err(Error::DegenerateDataset("logistic regression needs both classes".into()));
        }
        Ok(Self { p: ds.p(), n: idx.len() as f64, patterns, encoding: ds.encoding() })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    fn eta(&self, pt: &Pattern, theta: &[f64]) -> f64 {
        theta[0] + pt.x.iter().zip(&theta[1..]).map(|(x, b)| x * b).sum::<f64>()
    }

    pub fn objective(&self, theta: &[f64], c: f64) -> f64 {
        let nll: f64 = self
            .patterns
            .iter()
            .map(|pt| {
                let eta = self.eta(pt, theta);
                pt.weight * (log1pexp(eta) - if pt.y { eta } else { 0.0 })
            })
            .sum();
        nll / self.n + c * theta[1..].iter().map(|b| b * b).sum::<f64>()
    }

    pub fn gradient(&self, theta: &[f64], c: f64) -> DVector<f64> {
        let mut g = DVector::zeros(self.p + 1);
        for pt in &self.patterns {
            let r = pt.weight * (sigmoid(self.eta(pt, theta)) - f64::from(u8::from(pt.y))) / self.n;
            g[0] += r;
            for (k, x) in pt.x.iter().enumerate() {
                g[k + 1] += r * x;
            }
        }
        for k in 1..=self.p {
            g[k] += 2.0 * c * theta[k];
        }
        g
    }

    pub fn hessian(&self, theta: &[f64], c: f64) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.p + 1, self.p + 1);
        let mut xt = vec![1.0; self.p + 1];
        for pt in &self.patterns {
            let s = sigmoid(self.eta(pt, theta));
            let w = pt.weight * s * (1.0 - s) / self.n;
            xt[1..].copy_from_slice(&pt.x);
            for a in 0..=self.p {
                for b in 0..=self.p {
                    h[(a, b)] += w * xt[a] * xt[b];
                }
            }
        }
        for k in 1..=self.p {
            h[(k, k)] += 2.0 * c;
        }
        h
    }

    fn newton_direction(&self, h: DMatrix<f64>, g: &DVector<f64>, jitter: f64) -> DVector<f64> {
        let dim = h.nrows();
        let mut shift = 0.0;
        for _ in 0..12 {
            let m = &h + DMatrix::identity(dim, dim) * shift;
            if let Some(ch) = Cholesky::new(m) {
                return -ch.solve(g);
            }
            shift = if shift == 0.0 { jitter } else { shift * 100.0 };
        }
        -g.clone()
    }

    /// Damped Newton from `init` (zeros if `None`).
    pub fn fit(&self, c: f64, opts: &FitOptions, init: Option<&[f64]>) -> Result<LogisticModel> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidParameter(format!("regularization parameter must be >= 0, got {c}")));
        }
        let mut theta: Vec<f64> = match init {
            Some(t) if t.len() == self.p + 1 => t.to_vec(),
            Some(t) => return Err(Error::WrongShape(format!("initial point has {} entries, need {}", t.len(), self.p + 1))),
            None => vec![0.0; self.p + 1],
        };
        let mut f = self.objective(&theta, c);
        let mut trace = vec![f];
        let mut iterations = 0;
        let mut g = self.gradient(&theta, c);
        while g.norm() >= opts.tol && iterations < opts.max_iter {
            let d = self.newton_direction(self.hessian(&theta, c), &g, opts.jitter);
            let slack = 8.0 * f64::EPSILON * f.abs();
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let cand: Vec<f64> = theta.iter().zip(d.iter()).map(|(a, b)| a + t * b).collect();
                let fc = self.objective(&cand, c);
                if fc <= f + slack {
                    accepted = Some((cand, fc));
                    break;
                }
                t *= 0.5;
            }
            let Some((cand, fc)) = accepted else { break };
            theta = cand;
            f = fc;
            trace.push(f);
            iterations += 1;
            g = self.gradient(&theta, c);
        }
        let gn = g.norm();
        Ok(LogisticModel {
            beta0: theta[0],
            beta: theta[1..].to_vec(),
            c,
            converged: gn < opts.tol,
            iterations,
            final_gradient_norm: gn,
            objective: f,
            trace,
            encoding: self.encoding,
        })
    }
}

pub fn fit_logistic(ds: &Dataset, c: f64, weights: &SampleWeights) -> Result<LogisticModel> {
    LogisticProblem::new(ds, weights)?.fit(c, &FitOptions::default(), None)
}

/// `T_{X_i = j} = sigma(eta(x0)) - sigma(eta(x1))`, where `x_k` has
/// `X_i = j` and the other feature equal to `k`.
pub fn trend_indicator_logistic(model: &LogisticModel, variable: usize, value: usize) -> Result<f64> {
    let p = model.beta.len();
    if p != 2 {
        return Err(Error::WrongShape(format!("trend indicator needs 2 features, model has {p}")));
    }
    if !(1..=2).contains(&variable) {
        return Err(Error::IndexOutOfRange { index: variable, p });
    }
    if value > 1 {
        return Err(Error::InvalidParameter(format!("conditioning value must be 0 or 1, got {value}")));
    }
    let enc = model.encoding;
    let point = |other: usize| {
        let mut x = [0.0; 2];
        x[variable - 1] = enc.value(value);
        x[2 - variable] = enc.value(other);
        x
    };
    Ok(model.probability(&point(0)) - model.probability(&point(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{fixtures, ContingencyTable222};
    use proptest::prelude::*;

    fn problem(t: &ContingencyTable222) -> LogisticProblem {
        let ds = t.encode().unwrap();
        LogisticProblem::new(&ds, &SampleWeights::uniform(ds.n())).unwrap()
    }

    #[test]
    fn aggregates_patterns() {
        let p = problem(&fixtures::loan());
        assert_eq!(p.patterns().len(), 8);
        let total: f64 = p.patterns().iter().map(|pt| pt.weight).sum();
        assert_eq!(total, 110.0);
    }

    #[test]
    fn huge_penalty_fits_base_rate() {
        let ds = fixtures::loan().encode().unwrap();
        let m = fit_logistic(&ds, 1e8, &SampleWeights::uniform(ds.n())).unwrap();
        assert!(m.converged);
        assert!(m.beta.iter().map(|b| b * b).sum::<f64>().sqrt() < 1e-3);
        assert!((m.beta0 - (42.0f64 / 68.0).ln()).abs() < 1e-3);
    }

    #[test]
    fn symmetric_data_centres_the_intercept() {
        // Counts invariant under y -> 1 - y with both features flipped.
        let base = [[3, 5], [7, 11]];
        let t = ContingencyTable222::from_fn(|y, a, b| if y == 0 { base[a][b] } else { base[1 - a][1 - b] });
        let m = problem(&t).fit(1e-3, &FitOptions::default(), None).unwrap();
        assert!(m.converged);
        // The symmetry maps (beta0, beta) to (-beta0 - beta1 - beta2, beta), so
        // the linear predictor vanishes at the centre (1/2, 1/2).
        assert!((m.beta0 + 0.5 * (m.beta[0] + m.beta[1])).abs() < 1e-8);
        assert!(m.beta0.abs() > 1e-3);
    }

    #[test]
    fn single_class_is_degenerate() {
        let t = ContingencyTable222::from_fn(|y, _, _| if y == 1 { 2 } else { 0 });
        let ds = t.encode().unwrap();
        assert!(matches!(LogisticProblem::new(&ds, &SampleWeights::uniform(ds.n())), Err(Error::DegenerateDataset(_))));
    }

    #[test]
    fn separable_data_without_penalty_diverges() {
        let t = ContingencyTable222::from_fn(|y, a, _| if y == a { 4 } else { 0 });
        let p = problem(&t);
        // The gradient vanishes only as beta runs off to infinity.
        let m = p.fit(0.0, &FitOptions::default(), None).unwrap();
        assert!(m.beta[0] > 10.0);
        let short = p.fit(0.0, &FitOptions { max_iter: 3, ..FitOptions::default() }, None).unwrap();
        assert!(!short.converged);
        assert_eq!(short.iterations, 3);
    }

    #[test]
    fn zero_beta_gives_zero_trend() {
        let m = LogisticModel {
            beta0: 0.7,
            beta: vec![0.0, 0.0],
            c: 1.0,
            converged: true,
            iterations: 0,
            final_gradient_norm: 0.0,
            objective: 0.0,
            trace: vec![],
            encoding: Encoding::default(),
        };
        for i in 1..=2 {
            for j in 0..2 {
                assert_eq!(trend_indicator_logistic(&m, i, j).unwrap(), 0.0);
            }
        }
        assert!(trend_indicator_logistic(&m, 3, 0).is_err());
    }

    fn table_strategy() -> impl Strategy<Value = ContingencyTable222> {
        prop::array::uniform8(0u64..30)
            .prop_filter("both classes", |c| c[..4].iter().sum::<u64>() > 0 && c[4..].iter().sum::<u64>() > 0)
            .prop_map(ContingencyTable222::from_canonical)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn optimum_is_stationary_and_descent_is_monotone(t in table_strategy(), lc in -6f64..3.0) {
            let c = 10f64.powf(lc);
            let m = problem(&t).fit(c, &FitOptions::default(), None).unwrap();
            prop_assert!(m.converged);
            prop_assert!(m.final_gradient_norm < 1e-8);
            for w in m.trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-14 * w[0].abs());
            }
            let p = problem(&t);
            prop_assert!(m.objective <= p.objective(&[0.0, 0.0, 0.0], c) + 1e-15);
        }

        #[test]
        fn gradient_matches_central_differences(t in table_strategy(), lc in -4f64..1.0, th in prop::array::uniform3(-2f64..2.0)) {
            let c = 10f64.powf(lc);
            let p = problem(&t);
            let g = p.gradient(&th, c);
            let h = 1e-6;
            for k in 0..3 {
                let mut a = th;
                let mut b = th;
                a[k] += h;
                b[k] -= h;
                let fd = (p.objective(&a, c) - p.objective(&b, c)) / (2.0 * h);
                prop_assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1e-3), "k={} fd={} g={}", k, fd, g[k]);
            }
        }

        #[test]
        fn initialization_does_not_matter(t in table_strategy(), lc in -6f64..3.0, init in prop::array::uniform3(-3f64..3.0)) {
            let c = 10f64.powf(lc);
            let p = problem(&t);
            let a = p.fit(c, &FitOptions::default(), None).unwrap();
            let b = p.fit(c, &FitOptions::default(), Some(&init)).unwrap();
            for (x, y) in a.theta().iter().zip(b.theta()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }

        #[test]
        fn trend_sign_follows_coefficient(t in table_strategy(), lc in -6f64..3.0) {
            let m = problem(&t).fit(10f64.powf(lc), &FitOptions::default(), None).unwrap();
            for i in 1..=2 {
                let other = m.beta[2 - i];
                for j in 0..2 {
                    let tr = trend_indicator_logistic(&m, i, j).unwrap();
                    if other.abs() > 1e-12 {
                        prop_assert_eq!(tr.signum(), -other.signum());
                    }
                }
            }
        }
    }
}
