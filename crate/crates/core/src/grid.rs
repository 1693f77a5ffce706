//! Grids of regularization parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// The logistic-regression sweep: 10 + 150 + 40 log-spaced values over
/// `[1e-8, 1e8]`.
pub const LOGISTIC_GRID_SPEC: &str = "log:1e-8:1e-1:10,log:1e-1:1e6:150,log:1e6:1e8:40";

/// Strictly increasing list of positive regularization parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RegGrid {
    values: Vec<f64>,
    spec: String,
}

impl RegGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let spec = values.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",");
        Self::validated(values, spec)
    }

    fn validated(values: Vec<f64>, spec: String) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidGrid(format!("value {v} is not a positive finite number")));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("values must be strictly increasing".into()));
        }
        Ok(Self { values, spec })
    }

    /// `n` log-spaced points from `lo` to `hi` inclusive.
    pub fn log(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::validated(log_segment(lo, hi, n)?, format!("log:{lo:e}:{hi:e}:{n}"))
    }

    /// `n` evenly spaced points from `lo` to `hi` inclusive.
    pub fn lin(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::validated(lin_segment(lo, hi, n)?, format!("lin:{lo:e}:{hi:e}:{n}"))
    }

    /// Default logistic grid. Segment endpoints shared by neighbouring
    /// segments appear once, giving 198 points.
    pub fn logistic_default() -> Self {
        LOGISTIC_GRID_SPEC.parse().expect("default grid spec is valid")
    }

    /// Default ridge scan grid: 200 log-spaced points over `[1e-6, 1e8]`.
    pub fn ridge_default() -> Self {
        Self::log(1e-6, 1e8, 200).expect("valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// The textual specification this grid was built from.
    pub fn spec(&self) -> &str {
        &self.spec
    }
}

fn check_segment(lo: f64, hi: f64, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidGrid(format!("segment needs at least 2 points, got {n}")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Err(Error::InvalidGrid(format!("segment bounds {lo}..{hi} must satisfy 0 < lo < hi")));
    }
    Ok(())
}

fn log_segment(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    check_segment(lo, hi, n)?;
    let (a, b) = (lo.log10(), hi.log10());
    let step = (b - a) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|k| 10f64.powf(a + step * k as f64)).collect();
    v[0] = lo;
    v[n - 1] = hi;
    Ok(v)
}

fn lin_segment(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    check_segment(lo, hi, n)?;
    let step = (hi - lo) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|k| lo + step * k as f64).collect();
    v[n - 1] = hi;
    Ok(v)
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::InvalidGrid(format!("`{s}` is not a number")))
}

impl FromStr for RegGrid {
    type Err = Error;

    /// Comma-separated segments, each `log:lo:hi:n`, `lin:lo:hi:n` or a
    /// single value. Values repeated at segment joins are merged.
    fn from_str(s: &str) -> Result<Self> {
        let mut values: Vec<f64> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let fields: Vec<&str> = part.split(':').collect();
            let seg = match fields.as_slice() {
                [kind @ ("log" | "lin"), lo, hi, n] => {
                    let n: usize = n.trim().parse().map_err(|_| Error::InvalidGrid(format!("bad count in `{part}`")))?;
                    let (lo, hi) = (parse_num(lo)?, parse_num(hi)?);
                    if *kind == "log" {
                        log_segment(lo, hi, n)?
                    } else {
                        lin_segment(lo, hi, n)?
                    }
                }
                [v] => vec![parse_num(v)?],
                _ => return Err(Error::InvalidGrid(format!("cannot parse segment `{part}`"))),
            };
            for v in seg {
                match values.last() {
                    Some(last) if (v - last).abs() <= 1e-12 * last.abs() => {}
                    _ => values.push(v),
                }
            }
        }
        Self::validated(values, s.trim().to_string())
    }
}

impl fmt::Display for RegGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec)
    }
}

impl Serialize for RegGrid {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.spec)
    }
}
