//! Point estimates with 95% confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Result, SimError};

/// Below this many samples the interval uses a Student-t quantile.
const NORMAL_FROM: usize = 30;
const Z_975: f64 = 1.959_963_984_540_054;

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + carry
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample variance of the observations.
    pub variance: f64,
    pub half_width_95: f64,
    pub replications: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(SimError::InsufficientElements { needed: 2, got: n });
        }
        if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(SimError::InvalidParameter(format!(
                "non-finite observation {bad}"
            )));
        }
        let (mean, variance) = if samples.iter().all(|&x| x == samples[0]) {
            (samples[0], 0.0)
        } else {
            let mean = compensated_sum(samples.iter().copied()) / n as f64;
            let ss = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
            (mean, ss / (n - 1) as f64)
        };
        Ok(Self {
            mean,
            variance,
            half_width_95: quantile_975(n - 1) * (variance / n as f64).sqrt(),
            replications: n,
        })
    }

    /// Variance of the mean estimator.
    pub fn estimator_variance(&self) -> f64 {
        self.variance / self.replications as f64
    }

    pub fn interval(&self) -> (f64, f64) {
        (
            self.mean - self.half_width_95,
            self.mean + self.half_width_95,
        )
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.interval();
        lo <= x && x <= hi
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        let (a, b) = self.interval();
        let (c, d) = other.interval();
        a <= d && c <= b
    }
}

fn quantile_975(dof: usize) -> f64 {
    if dof + 1 >= NORMAL_FROM {
        return Z_975;
    }
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(Z_975)
}
