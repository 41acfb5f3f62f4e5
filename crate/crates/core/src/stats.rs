//! Replication-level summary statistics.

use libm::sqrt;

/// Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Number of independent batches (replications) behind the estimate.
    pub n: usize,
}

impl SimEstimate {
    pub fn exact(value: f64, n: usize) -> Self {
        SimEstimate { mean: value, stderr: 0.0, n }
    }

    /// Mean of i.i.d. batch means with the usual `s / sqrt(n)` error.
    pub fn from_batches(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return SimEstimate { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return SimEstimate { mean, stderr: f64::NAN, n };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        SimEstimate { mean, stderr: sqrt(var / n as f64), n }
    }

    /// Ratio of means `sum num / sum den` with a delta-method standard error.
    pub fn ratio(num: &[f64], den: &[f64]) -> Self {
        let n = num.len();
        assert_eq!(n, den.len(), "ratio batches must pair up");
        if n == 0 {
            return SimEstimate { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let mean_num = num.iter().sum::<f64>() / n as f64;
        let mean_den = den.iter().sum::<f64>() / n as f64;
        let r = mean_num / mean_den;
        if n == 1 {
            return SimEstimate { mean: r, stderr: f64::NAN, n };
        }
        let var = num
            .iter()
            .zip(den)
            .map(|(a, c)| {
                let d = a - r * c;
                d * d
            })
            .sum::<f64>()
            / (n - 1) as f64;
        SimEstimate { mean: r, stderr: sqrt(var / n as f64) / mean_den, n }
    }

    /// `(mean - target) / stderr`; zero when both agree exactly.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.mean - target;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}
