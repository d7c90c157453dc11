//! Input families sampled by inversion, plus their dependence on `θ`.

use serde::{Deserialize, Serialize};

use super::stream::RandomStream;
use crate::algebra::TangentEpoch;
use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Constant {
        value: f64,
    },
    Exponential {
        rate: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// Sum of `shape` exponentials, each drawn by inversion.
    Erlang {
        shape: u32,
        rate: f64,
    },
    /// Fixed values reused cyclically; consumes no randomness.
    Sequence {
        values: Vec<f64>,
    },
}

impl Family {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimError::InvalidParameter(msg));
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        match self {
            Family::Constant { value } if !ok(*value) => {
                bad(format!("constant {value} is not a duration"))
            }
            Family::Exponential { rate } | Family::Erlang { rate, .. }
                if !(rate.is_finite() && *rate > 0.0) =>
            {
                bad(format!("rate must be positive, got {rate}"))
            }
            Family::Erlang { shape: 0, .. } => bad("erlang shape must be at least 1".into()),
            Family::Uniform { low, high } if !(ok(*low) && ok(*high) && low <= high) => {
                bad(format!("uniform bounds [{low}, {high}] are invalid"))
            }
            Family::Sequence { values } if values.is_empty() || !values.iter().all(|&v| ok(v)) => {
                bad("sequence must be a nonempty list of durations".into())
            }
            _ => Ok(()),
        }
    }

    /// Whether each draw is a nondecreasing function of its uniforms, which
    /// antithetic pairing relies on.
    pub fn is_monotone(&self) -> bool {
        match self {
            Family::Constant { .. }
            | Family::Exponential { .. }
            | Family::Uniform { .. }
            | Family::Erlang { .. }
            | Family::Sequence { .. } => true,
        }
    }

    fn draw(&self, index: usize, stream: &mut RandomStream) -> f64 {
        let expo = |u: f64, rate: f64| -(-u).ln_1p() / rate;
        match self {
            Family::Constant { value } => *value,
            Family::Exponential { rate } => expo(stream.next_uniform(), *rate),
            Family::Uniform { low, high } => low + (high - low) * stream.next_uniform(),
            Family::Erlang { shape, rate } => (0..*shape)
                .map(|_| expo(stream.next_uniform(), *rate))
                .sum(),
            Family::Sequence { values } => values[index % values.len()],
        }
    }
}

/// How a sampled value depends on the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaBinding {
    #[default]
    None,
    /// `τ = θ_i · σ`
    Scale(usize),
    /// `τ = σ / θ_i`
    Rate(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub theta: ThetaBinding,
}

impl DistributionSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            theta: ThetaBinding::None,
        }
    }

    pub fn bound(family: Family, theta: ThetaBinding) -> Self {
        Self { family, theta }
    }

    pub fn exponential(rate: f64) -> Self {
        Self::new(Family::Exponential { rate })
    }

    pub fn validate(&self, theta: &[f64]) -> Result<()> {
        self.family.validate()?;
        self.factor(theta).map(|_| ())
    }

    /// Multiplier applied to the base draw and its derivative in `θ_i`.
    fn factor(&self, theta: &[f64]) -> Result<(f64, Option<(usize, f64)>)> {
        let get = |i: usize| -> Result<f64> {
            let t = *theta.get(i).ok_or_else(|| {
                SimError::InvalidParameter(format!(
                    "θ has {} entries, binding needs #{i}",
                    theta.len()
                ))
            })?;
            if !(t.is_finite() && t > 0.0) {
                return Err(SimError::InvalidParameter(format!(
                    "θ[{i}] = {t} must be positive"
                )));
            }
            Ok(t)
        };
        Ok(match self.theta {
            ThetaBinding::None => (1.0, None),
            ThetaBinding::Scale(i) => (get(i)?, Some((i, 1.0))),
            ThetaBinding::Rate(i) => {
                let t = get(i)?;
                (1.0 / t, Some((i, -1.0 / (t * t))))
            }
        })
    }

    /// `count` durations from `stream` at parameter `theta`.
    pub fn sample(
        &self,
        theta: &[f64],
        count: usize,
        stream: &mut RandomStream,
    ) -> Result<Vec<f64>> {
        self.validate(theta)?;
        let (f, _) = self.factor(theta)?;
        Ok((0..count)
            .map(|k| f * self.family.draw(k, stream))
            .collect())
    }

    /// Durations with their derivative in `θ_coord`, from the same draws as
    /// [`Self::sample`].
    pub fn sample_tangents(
        &self,
        theta: &[f64],
        coord: usize,
        count: usize,
        stream: &mut RandomStream,
    ) -> Result<Vec<TangentEpoch>> {
        self.validate(theta)?;
        let (f, d) = self.factor(theta)?;
        let df = match d {
            Some((i, df)) if i == coord => df,
            _ => 0.0,
        };
        Ok((0..count)
            .map(|k| {
                let base = self.family.draw(k, stream);
                TangentEpoch::new(f * base, df * base)
            })
            .collect())
    }
}
