use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Proportion with a Wilson score interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<Vec<bool>>,
}

impl RatioEstimate {
    pub fn wilson(count: usize, m: usize) -> Self {
        assert!(m > 0 && count <= m, "need 0 <= count <= m and m > 0");
        let n = m as f64;
        let p = count as f64 / n;
        let z2 = WILSON_Z * WILSON_Z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Self {
            estimate: p,
            lower: (centre - half).max(0.0).min(p),
            upper: (centre + half).min(1.0).max(p),
            m,
            count,
            verdicts: None,
        }
    }

    pub fn from_verdicts(verdicts: Vec<bool>, keep: bool) -> Self {
        let count = verdicts.iter().filter(|v| **v).count();
        let mut r = Self::wilson(count, verdicts.len());
        if keep {
            r.verdicts = Some(verdicts);
        }
        r
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Sample mean with a normal-approximation 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let k = values.len();
        assert!(k > 0, "mean of no values");
        let mean = values.iter().sum::<f64>() / k as f64;
        let half = if k > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            WILSON_Z * (var / k as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Self { mean, lower: mean - half, upper: mean + half, count: k }
    }
}
