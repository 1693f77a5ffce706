//! Sets of regularization parameters, represented as unions of open intervals.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

/// Exact rational used for endpoints computed from integral data.
pub type Rational = Ratio<i128>;

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// An interval endpoint; carries the exact rational when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    value: f64,
    exact: Option<Rational>,
}

impl Endpoint {
    pub fn exact(r: Rational) -> Self {
        Self { value: rational_to_f64(&r), exact: Some(r) }
    }

    pub fn approx(value: f64) -> Self {
        Self { value, exact: None }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        self.exact.as_ref()
    }
}

impl Serialize for Endpoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match &self.exact {
            Some(r) => {
                let mut map = serializer.serialize_map(Some(2))?;
                map.serialize_entry("num", r.numer())?;
                map.serialize_entry("den", r.denom())?;
                map.end()
            }
            None => {
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry("value", &self.value)?;
                map.end()
            }
        }
    }
}

/// Open interval `(lo, hi)`; `hi = None` stands for `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub lo: Endpoint,
    pub hi: Option<Endpoint>,
}

impl Interval {
    pub fn new(lo: Endpoint, hi: Option<Endpoint>) -> Self {
        Self { lo, hi }
    }

    pub fn unbounded(lo: Endpoint) -> Self {
        Self { lo, hi: None }
    }

    pub fn hi_value(&self) -> f64 {
        self.hi.as_ref().map_or(f64::INFINITY, Endpoint::value)
    }

    pub fn contains(&self, c: f64) -> bool {
        c > self.lo.value() && c < self.hi_value()
    }

    pub fn is_bounded(&self) -> bool {
        self.hi.is_some()
    }
}

/// A finite union of disjoint open intervals in `(0, inf)`.
///
/// Intervals are kept sorted; overlapping or touching intervals are merged
/// on construction so that no two stored intervals are adjacent.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct Regime {
    intervals: Vec<Interval>,
}

impl Regime {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn unbounded_from(lo: Endpoint) -> Self {
        Self { intervals: vec![Interval::unbounded(lo)] }
    }

    /// Builds a regime from arbitrary intervals. Empty or inverted intervals
    /// (`hi <= lo`) are dropped.
    pub fn from_intervals(mut intervals: Vec<Interval>) -> Self {
        intervals.retain(|iv| iv.lo.value() >= 0.0 && iv.hi_value() > iv.lo.value());
        intervals.sort_by(|a, b| a.lo.value().total_cmp(&b.lo.value()));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo.value() <= last.hi_value() => {
                    if iv.hi_value() > last.hi_value() {
                        last.hi = iv.hi;
                    }
                }
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, c: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(c))
    }

    /// Left endpoint of the first interval.
    pub fn infimum(&self) -> Option<&Endpoint> {
        self.intervals.first().map(|iv| &iv.lo)
    }

    /// `true` when the regime is non-empty and every interval has a finite right end.
    pub fn is_bounded(&self) -> bool {
        !self.is_empty() && self.intervals.iter().all(Interval::is_bounded)
    }
}
