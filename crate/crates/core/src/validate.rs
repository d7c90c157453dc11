//! Random instances and engine-versus-DES comparison.

use crate::des::{des_simulate, max_departure_gap};
use crate::error::{Result, SimError};
use crate::model::{simulate, ModelInputs, ModelSpec};
use crate::multiserver::GGmSpec;
use crate::network::{network_residual, simulate_network, NetworkSpec, RoutingRule};
use crate::recursions::{Blocking, ClosedTandemSpec, TandemSpec};
use crate::stochastic::{DistributionSpec, Family, RandomStream};
use crate::types::{Capacity, DurationSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstanceKind {
    Gg1,
    Tandem,
    Manufacturing,
    Communication,
    ClosedTandem,
    Ggm,
    Network,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 7] = [
        InstanceKind::Gg1,
        InstanceKind::Tandem,
        InstanceKind::Manufacturing,
        InstanceKind::Communication,
        InstanceKind::ClosedTandem,
        InstanceKind::Ggm,
        InstanceKind::Network,
    ];

    pub fn label(self) -> &'static str {
        match self {
            InstanceKind::Gg1 => "gg1",
            InstanceKind::Tandem => "tandem",
            InstanceKind::Manufacturing => "tandem-manufacturing",
            InstanceKind::Communication => "tandem-communication",
            InstanceKind::ClosedTandem => "closed-tandem",
            InstanceKind::Ggm => "ggm",
            InstanceKind::Network => "network",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub kind: InstanceKind,
    pub model: ModelSpec,
    pub inputs: ModelInputs,
    pub horizon: usize,
}

/// How instance durations are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    /// Half the instances on a half-unit grid, the rest continuous or constant.
    Mixed,
    /// Half-unit grid only; equal epochs are frequent.
    Coarse,
    /// Continuous families only; equal epochs have probability zero.
    Continuous,
}

struct Draw(RandomStream);

impl Draw {
    fn below(&mut self, n: usize) -> usize {
        ((self.0.next_uniform() * n as f64) as usize).min(n - 1)
    }

    fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    /// Durations with mean about `scale / 2`. Coarse instances use a half-unit
    /// grid so equal epochs are common; the others mix continuous families.
    fn durations(&mut self, count: usize, scale: f64, grid: Grid) -> Vec<f64> {
        if grid == Grid::Coarse {
            return (0..count)
                .map(|_| (self.0.next_uniform() * scale * 2.0).floor() / 2.0)
                .collect();
        }
        let mean = scale / 2.0;
        let families = if grid == Grid::Continuous { 3 } else { 4 };
        let family = match self.below(families) {
            0 => Family::Uniform {
                low: 0.0,
                high: scale,
            },
            1 => Family::Exponential { rate: 1.0 / mean },
            2 => Family::Erlang {
                shape: 3,
                rate: 3.0 / mean,
            },
            _ => Family::Constant {
                value: mean * self.0.next_uniform(),
            },
        };
        DistributionSpec::new(family)
            .sample(&[], count, &mut self.0)
            .expect("families above are valid")
    }
}

/// A random instance of `kind` with at most 30 customers.
pub fn random_instance(kind: InstanceKind, seed: u64) -> Result<Instance> {
    random_instance_with(kind, seed, 30, Grid::Mixed)
}

/// A random instance of `kind` with at most `max_horizon` customers; the same
/// arguments always give the same instance.
pub fn random_instance_with(
    kind: InstanceKind,
    seed: u64,
    max_horizon: usize,
    grid: Grid,
) -> Result<Instance> {
    let mut draw = Draw(RandomStream::new(seed, 0x5eed_0000 + kind as u64));
    let coarse = match (grid, draw.below(2)) {
        (Grid::Mixed, 0) => Grid::Coarse,
        (Grid::Mixed, _) => Grid::Mixed,
        (g, _) => g,
    };
    let horizon = draw.range(1, max_horizon.max(1));
    let nodes = draw.range(1, 5);
    let open = |draw: &mut Draw, nodes: usize| {
        ModelInputs::new(
            draw.durations(horizon, 2.0, coarse),
            (0..nodes)
                .map(|_| draw.durations(horizon, 3.0, coarse))
                .collect(),
        )
    };
    let buffers = |draw: &mut Draw, nodes: usize| -> Vec<Capacity> {
        (1..nodes)
            .map(|_| match draw.below(4) {
                0 => Capacity::Unbounded,
                _ => Capacity::Finite(draw.below(3)),
            })
            .collect()
    };
    let (model, inputs, horizon) = match kind {
        InstanceKind::Gg1 => (ModelSpec::Gg1, open(&mut draw, 1), horizon),
        InstanceKind::Tandem => (
            ModelSpec::Tandem(TandemSpec::unbounded(nodes)),
            open(&mut draw, nodes),
            horizon,
        ),
        InstanceKind::Manufacturing | InstanceKind::Communication => {
            let nodes = nodes.max(2);
            let blocking = if kind == InstanceKind::Manufacturing {
                Blocking::Manufacturing
            } else {
                Blocking::Communication
            };
            let b = buffers(&mut draw, nodes);
            (
                ModelSpec::Tandem(TandemSpec::with_buffers(b, blocking)),
                open(&mut draw, nodes),
                horizon,
            )
        }
        InstanceKind::ClosedTandem => {
            let mut pops: Vec<usize> = (0..nodes).map(|_| draw.below(3)).collect();
            if pops.iter().all(|&p| p == 0) {
                pops[draw.below(nodes)] = 1;
            }
            let services = (0..nodes)
                .map(|_| draw.durations(horizon, 3.0, coarse))
                .collect();
            (
                ModelSpec::ClosedTandem(ClosedTandemSpec::new(pops)),
                ModelInputs::closed(services),
                horizon,
            )
        }
        InstanceKind::Ggm => {
            let servers = draw.range(1, 4);
            let inputs = ModelInputs::new(
                draw.durations(horizon, 1.0, coarse),
                vec![draw.durations(horizon, 4.0, coarse)],
            );
            (ModelSpec::Ggm(GGmSpec::new(servers)), inputs, horizon)
        }
        InstanceKind::Network => random_network(&mut draw, nodes, horizon, coarse)?,
    };
    Ok(Instance {
        kind,
        model,
        inputs,
        horizon,
    })
}

fn random_network(
    draw: &mut Draw,
    nodes: usize,
    limit: usize,
    coarse: Grid,
) -> Result<(ModelSpec, ModelInputs, usize)> {
    let mut populations: Vec<Capacity> = (0..nodes)
        .map(|_| match draw.below(8) {
            0 => Capacity::Unbounded,
            _ => Capacity::Finite(draw.below(3)),
        })
        .collect();
    if populations.iter().all(|&p| p == Capacity::Finite(0)) {
        populations[draw.below(nodes)] = Capacity::Finite(1);
    }
    let routing = (0..nodes)
        .map(|_| {
            let len = draw.range(1, 3);
            RoutingRule::Periodic((0..len).map(|_| draw.below(nodes)).collect())
        })
        .collect();
    let mut spec = NetworkSpec::new(populations, routing);
    let services: Vec<Vec<f64>> = (0..nodes)
        .map(|_| draw.durations(limit, 3.0, coarse))
        .collect();
    let seqs = services
        .iter()
        .map(|s| DurationSequence::services(s.clone()))
        .collect::<Result<Vec<_>>>()?;
    // horizons under which every node finishes: what each node manages
    // before the first one reaches `limit`
    let horizons = match simulate_network(&spec, &seqs, &vec![limit; nodes]) {
        Ok(_) => vec![limit; nodes],
        Err(
            SimError::UnderSpecifiedHorizon { produced, .. } | SimError::Deadlock { produced, .. },
        ) => produced,
        Err(e) => return Err(e),
    };
    spec.horizons = Some(horizons);
    Ok((
        ModelSpec::Network(spec),
        ModelInputs::closed(services),
        limit,
    ))
}

/// Outcome of running one instance through both implementations.
#[derive(Debug, Clone, PartialEq)]
pub struct Agreement {
    pub kind: InstanceKind,
    /// Largest absolute departure-epoch difference; `None` if the two
    /// disagree on shape or outcome.
    pub gap: Option<f64>,
    /// Largest residual of the network equations, networks only.
    pub residual: Option<f64>,
    pub engine_error: Option<SimError>,
    pub oracle_error: Option<SimError>,
}

impl Agreement {
    pub fn within(&self, tolerance: f64) -> bool {
        let both_failed_alike = match (&self.engine_error, &self.oracle_error) {
            (Some(a), Some(b)) => std::mem::discriminant(a) == std::mem::discriminant(b),
            (None, None) => true,
            _ => false,
        };
        if self.engine_error.is_some() {
            return both_failed_alike;
        }
        both_failed_alike
            && self.gap.is_some_and(|g| g <= tolerance)
            && self.residual.is_none_or(|r| r <= tolerance)
    }
}

pub fn compare(instance: &Instance) -> Agreement {
    let engine = simulate(&instance.model, &instance.inputs, instance.horizon);
    let oracle = des_simulate(&instance.model, &instance.inputs, instance.horizon);
    let residual = match (&instance.model, &engine) {
        (ModelSpec::Network(spec), Ok(path)) => {
            let seqs: Option<Vec<DurationSequence>> = instance
                .inputs
                .services
                .iter()
                .map(|s| DurationSequence::services(s.clone()).ok())
                .collect();
            seqs.and_then(|s| network_residual(spec, &s, path).ok())
        }
        _ => None,
    };
    let gap = match (&engine, &oracle) {
        (Ok(a), Ok(b)) => max_departure_gap(a, b),
        _ => None,
    };
    Agreement {
        kind: instance.kind,
        gap,
        residual,
        engine_error: engine.err(),
        oracle_error: oracle.err(),
    }
}

/// `per_kind` instances of every kind with at most `max_horizon` customers.
pub fn corpus(per_kind: usize, max_horizon: usize, seed: u64) -> Result<Vec<Instance>> {
    InstanceKind::ALL
        .iter()
        .flat_map(|&k| {
            (0..per_kind as u64).map(move |i| (k, seed.wrapping_mul(1_000_003).wrapping_add(i)))
        })
        .map(|(k, s)| random_instance_with(k, s, max_horizon, Grid::Mixed))
        .collect()
}
