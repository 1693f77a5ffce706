use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    #[default]
    Uniform,
    /// `w = N / (2 N_y)` for a row of class `y`.
    Balanced,
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "balanced" => Ok(Self::Balanced),
            _ => Err(Error::InvalidParameter(format!("unknown weight scheme `{s}`"))),
        }
    }
}

/// Positive per-row weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleWeights {
    values: Vec<f64>,
}

impl SampleWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParameter("sample weights must be positive".into()));
        }
        Ok(Self { values })
    }

    pub fn uniform(n: usize) -> Self {
        Self { values: vec![1.0; n] }
    }

    pub fn balanced(labels: &[bool]) -> Result<Self> {
        let n = labels.len() as f64;
        let n1 = labels.iter().filter(|b| **b).count() as f64;
        let n0 = n - n1;
        if n0 == 0.0 || n1 == 0.0 {
            return Err(Error::DegenerateDataset("balanced weights need both classes".into()));
        }
        let (w0, w1) = (n / (2.0 * n0), n / (2.0 * n1));
        Ok(Self { values: labels.iter().map(|b| if *b { w1 } else { w0 }).collect() })
    }

    pub fn from_scheme(scheme: WeightScheme, labels: &[bool]) -> Result<Self> {
        match scheme {
            WeightScheme::Uniform => Ok(Self::uniform(labels.len())),
            WeightScheme::Balanced => Self::balanced(labels),
        }
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

    pub fn select(&self, idx: &[usize]) -> Self {
        Self { values: idx.iter().map(|&i| self.values[i]).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_weights_sum_to_n() {
        let labels = [true, false, false, false, true, false, false];
        let w = SampleWeights::balanced(&labels).unwrap();
        let total: f64 = w.values().iter().sum();
        assert!((total - 7.0).abs() < 1e-9);
        assert_eq!(w.values()[0], 7.0 / 4.0);
        assert_eq!(w.values()[1], 7.0 / 10.0);
    }

    #[test]
    fn balanced_equals_uniform_for_equal_classes() {
        let labels = [true, false, true, false];
        assert_eq!(SampleWeights::balanced(&labels).unwrap(), SampleWeights::uniform(4));
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(SampleWeights::balanced(&[true, true]).is_err());
        assert!(SampleWeights::new(vec![1.0, 0.0]).is_err());
    }
}
