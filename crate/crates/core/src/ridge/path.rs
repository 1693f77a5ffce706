//! Evaluation of single coefficients along the ridge path.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::Signed;

use super::{ExactGram, RidgeSummary};
use crate::regime::{rational_to_f64, Rational};

/// Relative size of rounding noise below which a value counts as zero.
const NOISE: f64 = 1e-13;

/// Sign of a value given an absolute noise bound.
pub fn sign_of((value, noise): (f64, f64)) -> i8 {
    if value.abs() <= noise || value == 0.0 {
        0
    } else if value > 0.0 {
        1
    } else {
        -1
    }
}

fn sign_rational(r: &Rational) -> i8 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

/// A regularization path, coefficient by coefficient.
pub trait PathEval {
    fn p(&self) -> usize;

    /// `beta_m(c)` together with a bound on its rounding error.
    fn coef(&self, m: usize, c: f64) -> (f64, f64);

    /// The `c -> 0` limit of `beta_m`, with an error bound.
    fn limit(&self, m: usize) -> (f64, f64);

    /// Sign of `beta_m(c)` as `c -> inf`; 0 when the path is identically 0.
    fn asymptotic_sign(&self, m: usize) -> i8;

    /// Sign of the `c -> 0` limit.
    fn limit_sign(&self, m: usize) -> i8 {
        sign_of(self.limit(m))
    }

    fn sign_at(&self, m: usize, c: f64) -> i8 {
        sign_of(self.coef(m, c))
    }
}

/// Explicit two-feature path `beta_m(c) = (c sy_m - K_m) / D(c)`.
#[derive(Debug, Clone)]
pub struct ClosedFormPath {
    s: RidgeSummary<f64>,
    exact: Option<RidgeSummary<Rational>>,
}

impl ClosedFormPath {
    pub fn new(s: RidgeSummary<f64>, exact: Option<RidgeSummary<Rational>>) -> Self {
        Self { s, exact }
    }
}

impl PathEval for ClosedFormPath {
    fn p(&self) -> usize {
        2
    }

    fn coef(&self, m: usize, c: f64) -> (f64, f64) {
        let s = &self.s;
        let o = 1 - m;
        let num = c * s.sy(m) - s.offset(m);
        let d = s.det(c);
        let mag = c * s.sy(m).abs() + (s.s12 * s.sy(o)).abs() + (s.s_diag(o) * s.sy(m)).abs();
        (num / d, NOISE * mag / d)
    }

    fn limit(&self, m: usize) -> (f64, f64) {
        if let Some(e) = &self.exact {
            return (rational_to_f64(&e.limit()[m]), 0.0);
        }
        let s = &self.s;
        let d0 = s.det(0.0);
        let scale = s.s11 * s.s22 + s.s12 * s.s12;
        if d0.abs() > 1e-12 * scale {
            let o = 1 - m;
            let mag = (s.s12 * s.sy(o)).abs() + (s.s_diag(o) * s.sy(m)).abs();
            (-s.offset(m) / d0, NOISE * mag / d0.abs())
        } else {
            let t = s.s11 + s.s22;
            if t == 0.0 {
                (0.0, 0.0)
            } else {
                (s.sy(m) / t, NOISE * s.sy(m).abs() / t)
            }
        }
    }

    fn asymptotic_sign(&self, m: usize) -> i8 {
        if let Some(e) = &self.exact {
            let sy = sign_rational(&e.sy(m));
            return if sy != 0 { sy } else { -sign_rational(&e.offset(m)) };
        }
        let s = &self.s;
        let sy = sign_of((s.sy(m), 0.0));
        if sy != 0 {
            return sy;
        }
        let o = 1 - m;
        let mag = (s.s12 * s.sy(o)).abs() + (s.s_diag(o) * s.sy(m)).abs();
        -sign_of((s.offset(m), NOISE * mag))
    }
}

/// Path through the eigendecomposition `G = Q diag(lambda) Q^T`:
/// `beta(c) = sum_k q_k (q_k^T b) / (lambda_k + c)`.
#[derive(Debug, Clone)]
pub struct SpectralPath {
    q: DMatrix<f64>,
    lambda: DVector<f64>,
    a: DVector<f64>,
    krylov: Option<Vec<Vec<i128>>>,
    singular: bool,
    /// Coefficients whose Gram row and moment vanish, so `beta_m = b_m / c = 0`.
    null: Vec<bool>,
}

impl SpectralPath {
    pub fn new(gram: &DMatrix<f64>, xty: &DVector<f64>, exact: Option<&ExactGram>) -> Self {
        let eig = SymmetricEigen::new(gram.clone());
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = lmax * gram.nrows() as f64 * 1e-12;
        let lambda = eig.eigenvalues.map(|l| if l <= tol { 0.0 } else { l });
        let mut a = eig.eigenvectors.transpose() * xty;
        // b lies in the range of G, so components along null directions are rounding noise.
        for k in 0..a.len() {
            if lambda[k] == 0.0 {
                a[k] = 0.0;
            }
        }
        let singular = lambda.iter().any(|l| *l == 0.0);
        let null = (0..xty.len()).map(|m| xty[m] == 0.0 && gram.row(m).iter().all(|v| *v == 0.0)).collect();
        Self { q: eig.eigenvectors, lambda, a, krylov: exact.map(ExactGram::krylov), singular, null }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn beta(&self, c: f64) -> DVector<f64> {
        DVector::from_fn(self.lambda.len(), |m, _| self.coef(m, c).0)
    }

    fn weighted(&self, m: usize, w: impl Fn(f64) -> f64) -> (f64, f64) {
        if self.null[m] {
            return (0.0, 0.0);
        }
        let mut sum = 0.0;
        let mut mag = 0.0;
        for k in 0..self.lambda.len() {
            if self.a[k] == 0.0 {
                continue;
            }
            let t = self.q[(m, k)] * self.a[k] * w(self.lambda[k]);
            sum += t;
            mag += t.abs();
        }
        (sum, NOISE * mag)
    }
}

impl PathEval for SpectralPath {
    fn p(&self) -> usize {
        self.lambda.len()
    }

    fn coef(&self, m: usize, c: f64) -> (f64, f64) {
        self.weighted(m, |l| 1.0 / (l + c))
    }

    fn limit(&self, m: usize) -> (f64, f64) {
        self.weighted(m, |l| if l > 0.0 { 1.0 / l } else { 0.0 })
    }

    /// `beta(c) = sum_j (-1)^j G^j b / c^(j+1)`; the first non-zero term of
    /// the expansion decides. Uses exact integer moments when available.
    fn asymptotic_sign(&self, m: usize) -> i8 {
        let p = self.lambda.len();
        if let Some(kry) = &self.krylov {
            for (j, v) in kry.iter().enumerate() {
                if v[m] != 0 {
                    let s = if v[m] > 0 { 1 } else { -1 };
                    return if j % 2 == 0 { s } else { -s };
                }
            }
            if kry.len() == p {
                return 0;
            }
        }
        for j in 0..p {
            let s = sign_of(self.weighted(m, |l| l.powi(j as i32)));
            if s != 0 {
                return if j % 2 == 0 { s } else { -s };
            }
        }
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ridge::RidgeProblem;
    use crate::tables::fixtures;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_matches_closed_form_on_loan() {
        let p = RidgeProblem::new(&fixtures::loan().encode().unwrap(), false);
        let sp = p.spectral();
        let cf = ClosedFormPath::new(p.summary().unwrap(), p.summary_exact());
        for c in [1e-6, 0.1, 3.0 / 13.0, 5.0, 1e4] {
            for m in 0..2 {
                assert_relative_eq!(sp.coef(m, c).0, cf.coef(m, c).0, max_relative = 1e-9, epsilon = 1e-15);
            }
        }
        assert_relative_eq!(sp.limit(0).0, -3.0 / 2079.0, max_relative = 1e-9);
        assert_eq!(sp.asymptotic_sign(0), 1);
        assert_eq!(cf.asymptotic_sign(0), 1);
        assert_eq!(cf.limit_sign(0), -1);
    }

    #[test]
    fn zero_columns_have_zero_path() {
        let ds = fixtures::loan().encode().unwrap().append_zero_columns(3);
        let p = RidgeProblem::new(&ds, false);
        let sp = p.spectral();
        assert!(sp.is_singular());
        for m in 2..5 {
            assert_eq!(sp.limit_sign(m), 0);
            assert_eq!(sp.sign_at(m, 1.0), 0);
            assert_eq!(sp.asymptotic_sign(m), 0);
        }
        assert_relative_eq!(sp.limit(0).0, -3.0 / 2079.0, max_relative = 1e-9);
    }

    #[test]
    fn asymptotic_sign_uses_higher_order_terms() {
        // b_0 = 0 but (G b)_0 > 0, so beta_0 ~ -(G b)_0 / c^2 < 0.
        let gram = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let xty = DVector::from_vec(vec![0.0, 1.0]);
        let sp = SpectralPath::new(&gram, &xty, None);
        assert_eq!(sp.asymptotic_sign(0), -1);
        assert_eq!(sp.sign_at(0, 1e6), -1);
        assert_eq!(sp.asymptotic_sign(1), 1);
    }
}
