//! Fixed workloads shared by the benchmarks.

use recursim::{
    Blocking, Capacity, ClosedTandemSpec, DistributionSpec, GGmSpec, ModelInputs, ModelSpec,
    StochasticModel, TandemSpec,
};

/// Named model with exponential inputs at moderate load.
pub struct Workload {
    pub name: &'static str,
    pub model: StochasticModel,
}

impl Workload {
    pub fn inputs(&self, horizon: usize) -> ModelInputs {
        self.model
            .sample_inputs(&[], horizon, 1, 0, false)
            .expect("workload laws are valid")
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.model.model
    }
}

fn open(name: &'static str, model: ModelSpec, rate: f64, nodes: usize) -> Workload {
    Workload {
        name,
        model: StochasticModel {
            model,
            interarrival: Some(DistributionSpec::exponential(rate)),
            services: vec![DistributionSpec::exponential(1.0); nodes],
        },
    }
}

pub fn workloads() -> Vec<Workload> {
    let buffers = vec![Capacity::Finite(2); 3];
    vec![
        open("gg1", ModelSpec::Gg1, 0.8, 1),
        open(
            "tandem4",
            ModelSpec::Tandem(TandemSpec::unbounded(4)),
            0.8,
            4,
        ),
        open(
            "manufacturing4",
            ModelSpec::Tandem(TandemSpec::with_buffers(
                buffers.clone(),
                Blocking::Manufacturing,
            )),
            0.8,
            4,
        ),
        open(
            "communication4",
            ModelSpec::Tandem(TandemSpec::with_buffers(buffers, Blocking::Communication)),
            0.8,
            4,
        ),
        open("ggm4", ModelSpec::Ggm(GGmSpec::new(4)), 3.2, 1),
        Workload {
            name: "closed4",
            model: StochasticModel {
                model: ModelSpec::ClosedTandem(ClosedTandemSpec::new(vec![3, 0, 2, 1])),
                interarrival: None,
                services: vec![DistributionSpec::exponential(1.0); 4],
            },
        },
    ]
}
