//! Pathwise (infinitesimal perturbation) derivatives.
//!
//! Tangent inputs are pushed through the same engines as plain epochs; each
//! epoch carries `dD/dθ` alongside its value.

use serde::{Deserialize, Serialize};

use crate::algebra::{TangentEpoch, Tangents};
use crate::error::{Result, SimError};
use crate::metrics::Measure;
use crate::model::{simulate, simulate_with, ModelInputs, ModelSpec};
use crate::stochastic::{summarize, Estimate, MonteCarlo, StochasticModel};
use crate::types::SamplePath;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentRun {
    pub path: SamplePath<TangentEpoch>,
    /// Max/min evaluations whose operands had equal values but different
    /// derivatives; there the one-sided derivatives disagree.
    pub ties: u64,
}

pub fn propagate_tangents(
    model: &ModelSpec,
    inputs: &ModelInputs<TangentEpoch>,
    horizon: usize,
) -> Result<TangentRun> {
    let ops = Tangents::new();
    let path = simulate_with(&ops, model, inputs, horizon)?;
    Ok(TangentRun {
        path,
        ties: ops.ties(),
    })
}

/// Values and derivatives of `measures` on one tangent realization.
pub fn measure_derivatives(
    model: &ModelSpec,
    measures: &[Measure],
    inputs: &ModelInputs<TangentEpoch>,
    horizon: usize,
) -> Result<(Vec<TangentEpoch>, u64)> {
    let run = propagate_tangents(model, inputs, horizon)?;
    let values = measures
        .iter()
        .map(|m| m.evaluate(model, &run.path, inputs))
        .collect::<Result<_>>()?;
    Ok((values, run.ties))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub estimate: Estimate,
    /// Ties summed over replications.
    pub ties: u64,
}

/// Replicated IPA estimate of `d E[measure] / d θ_coord`.
pub fn ipa_gradient(
    sm: &StochasticModel,
    measures: &[Measure],
    theta: &[f64],
    coord: usize,
    horizon: usize,
    replications: usize,
    mc: &MonteCarlo,
) -> Result<Vec<GradientEstimate>> {
    let k = measures.len();
    let rows = mc.replicate(replications, |r| {
        let inputs = sm.sample_tangent_inputs(theta, coord, horizon, mc.seed, r)?;
        let (values, ties) = measure_derivatives(&sm.model, measures, &inputs, horizon)?;
        let mut row: Vec<f64> = values.iter().map(|v| v.tangent).collect();
        row.push(ties as f64);
        Ok(row)
    })?;
    let ties = rows.iter().map(|r| r[k] as u64).sum();
    Ok(summarize(&rows, k)?
        .into_iter()
        .map(|estimate| GradientEstimate { estimate, ties })
        .collect())
}

/// Central finite difference `(F(θ + h e) − F(θ − h e)) / 2h` on common streams.
#[allow(clippy::too_many_arguments)]
pub fn fd_gradient(
    sm: &StochasticModel,
    measures: &[Measure],
    theta: &[f64],
    coord: usize,
    step: f64,
    horizon: usize,
    replications: usize,
    mc: &MonteCarlo,
) -> Result<Vec<Estimate>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(SimError::InvalidParameter(format!(
            "step {step} must be positive"
        )));
    }
    if coord >= theta.len() {
        return Err(SimError::InvalidParameter(format!(
            "coordinate {coord} outside θ of length {}",
            theta.len()
        )));
    }
    let shifted = |sign: f64| {
        let mut t = theta.to_vec();
        t[coord] += sign * step;
        t
    };
    let (up, down) = (shifted(1.0), shifted(-1.0));
    sm.validate(&up)?;
    sm.validate(&down)?;
    let rows = mc.replicate(replications, |r| {
        let eval = |t: &[f64]| -> Result<Vec<f64>> {
            let inputs = sm.sample_inputs(t, horizon, mc.seed, r, false)?;
            let path = simulate(&sm.model, &inputs, horizon)?;
            measures
                .iter()
                .map(|m| m.evaluate(&sm.model, &path, &inputs))
                .collect()
        };
        let (a, b) = (eval(&up)?, eval(&down)?);
        Ok(a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y) / (2.0 * step))
            .collect())
    })?;
    summarize(&rows, measures.len())
}
