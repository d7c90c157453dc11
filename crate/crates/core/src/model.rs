//! One entry point over every model class.

use serde::{Deserialize, Serialize};

use crate::algebra::{Exact, Ops, Scalar};
use crate::error::{Result, SimError};
use crate::multiserver::{ggm, GGmSpec};
use crate::network::{network, NetworkSpec};
use crate::recursions::{closed_tandem, gg1, open_tandem, ClosedTandemSpec, TandemSpec};
use crate::types::{Role, SamplePath};

/// The system being simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Gg1,
    /// Open tandem; finite buffers select one of the blocking variants.
    Tandem(TandemSpec),
    ClosedTandem(ClosedTandemSpec),
    Ggm(GGmSpec),
    Network(NetworkSpec),
}

impl ModelSpec {
    pub fn node_count(&self) -> usize {
        match self {
            ModelSpec::Gg1 | ModelSpec::Ggm(_) => 1,
            ModelSpec::Tandem(t) => t.node_count,
            ModelSpec::ClosedTandem(c) => c.node_count(),
            ModelSpec::Network(n) => n.node_count(),
        }
    }

    /// Whether the model consumes an interarrival sequence.
    pub fn has_external_arrivals(&self) -> bool {
        matches!(
            self,
            ModelSpec::Gg1 | ModelSpec::Tandem(_) | ModelSpec::Ggm(_)
        )
    }

    /// Models built from max and + only.
    pub fn is_max_plus(&self) -> bool {
        matches!(
            self,
            ModelSpec::Gg1 | ModelSpec::Tandem(_) | ModelSpec::ClosedTandem(_)
        )
    }

    /// Number of services each node performs when run with `horizon`.
    pub fn node_horizons(&self, horizon: usize) -> Vec<usize> {
        match self {
            ModelSpec::Network(n) => n
                .horizons
                .clone()
                .unwrap_or_else(|| vec![horizon; n.node_count()]),
            other => vec![horizon; other.node_count()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Gg1 => Ok(()),
            ModelSpec::Tandem(t) => t.validate(),
            ModelSpec::ClosedTandem(c) => c.validate(),
            ModelSpec::Ggm(g) => g.validate(),
            ModelSpec::Network(n) => n.validate(&self.node_horizons(0)),
        }
    }
}

/// Duration inputs of one realization.
///
/// `interarrivals` is empty for closed models; `services[n]` feeds node `n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelInputs<T = f64> {
    pub interarrivals: Vec<T>,
    pub services: Vec<Vec<T>>,
}

impl<T: Scalar> ModelInputs<T> {
    pub fn new(interarrivals: Vec<T>, services: Vec<Vec<T>>) -> Self {
        Self {
            interarrivals,
            services,
        }
    }

    pub fn closed(services: Vec<Vec<T>>) -> Self {
        Self::new(Vec::new(), services)
    }

    fn check_nonnegative(&self) -> Result<()> {
        let bad = |role: Role, seq: &[T]| {
            seq.iter()
                .position(|v| !(v.value().is_finite() && v.value() >= 0.0))
                .map(|index| SimError::NegativeDuration {
                    role,
                    index,
                    value: seq[index].value(),
                })
        };
        if let Some(e) = bad(Role::Interarrival, &self.interarrivals) {
            return Err(e);
        }
        for s in &self.services {
            if let Some(e) = bad(Role::Service, s) {
                return Err(e);
            }
        }
        Ok(())
    }

    fn service_slices(&self) -> Vec<&[T]> {
        self.services.iter().map(Vec::as_slice).collect()
    }
}

/// Evaluates the recursion of `model` on `inputs` for `horizon` customers.
pub fn simulate(model: &ModelSpec, inputs: &ModelInputs, horizon: usize) -> Result<SamplePath> {
    simulate_with(&Exact, model, inputs, horizon)
}

pub(crate) fn simulate_with<O: Ops>(
    ops: &O,
    model: &ModelSpec,
    inputs: &ModelInputs<O::T>,
    horizon: usize,
) -> Result<SamplePath<O::T>> {
    inputs.check_nonnegative()?;
    let services = inputs.service_slices();
    let first = || services.first().copied().ok_or(SimError::MissingNode(0));
    match model {
        ModelSpec::Gg1 => gg1(ops, &inputs.interarrivals, first()?, horizon),
        ModelSpec::Tandem(t) => open_tandem(ops, t, &inputs.interarrivals, &services, horizon),
        ModelSpec::ClosedTandem(c) => closed_tandem(ops, c, &services, horizon),
        ModelSpec::Ggm(g) => ggm(ops, g, &inputs.interarrivals, first()?, horizon),
        ModelSpec::Network(n) => network(ops, n, &services, &model.node_horizons(horizon)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispatch_matches_direct_calls() {
        let inputs = ModelInputs::new(vec![1.0, 1.0, 1.0], vec![vec![2.0, 2.0, 2.0]]);
        let p = simulate(&ModelSpec::Gg1, &inputs, 3).unwrap();
        assert_eq!(p.departures[0], vec![3.0, 5.0, 7.0]);
        let p = simulate(&ModelSpec::Ggm(GGmSpec::new(1)), &inputs, 3).unwrap();
        assert_eq!(p.departures[0], vec![3.0, 5.0, 7.0]);
    }

    #[test]
    fn negative_inputs_rejected() {
        let inputs = ModelInputs::new(vec![1.0], vec![vec![-1.0]]);
        assert!(matches!(
            simulate(&ModelSpec::Gg1, &inputs, 1),
            Err(SimError::NegativeDuration {
                role: Role::Service,
                ..
            })
        ));
    }

    #[test]
    fn toml_shape_round_trips_through_json() {
        let model = ModelSpec::Tandem(TandemSpec::unbounded(3));
        let text = serde_json::to_string(&model).unwrap();
        assert!(text.contains("\"kind\":\"tandem\""));
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);
    }
}
