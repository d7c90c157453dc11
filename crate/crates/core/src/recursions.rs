//! Single-server recursions: G/G/1, open tandems (with optional finite
//! buffers under manufacturing or communication blocking) and closed tandems.
//!
//! Customer indices in comments are 1-based as in the usual notation
//! (`D_k^n`); storage is 0-based. Terms whose customer index is nonpositive
//! are dropped from maxima instead of carrying a `-inf` sentinel, and
//! `D_0^n` is anchored at time zero.

use serde::{Deserialize, Serialize};

use crate::algebra::{Exact, Ops, Scalar};
use crate::error::{Result, SimError};
use crate::types::{Capacity, DurationSequence, Role, SamplePath};

/// Blocking rule applied when a downstream buffer is full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Blocking {
    /// A finished customer holds its server until the next buffer has room.
    #[default]
    Manufacturing,
    /// A server does not start a service while the next buffer is full.
    Communication,
}

/// An open tandem of `node_count` single-server queues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TandemSpec {
    pub node_count: usize,
    /// Buffer capacities of nodes 2..=N. Empty means every buffer is unbounded.
    #[serde(default)]
    pub buffers: Vec<Capacity>,
    #[serde(default)]
    pub blocking: Blocking,
}

impl TandemSpec {
    pub fn unbounded(node_count: usize) -> Self {
        Self {
            node_count,
            buffers: Vec::new(),
            blocking: Blocking::Manufacturing,
        }
    }

    pub fn with_buffers(buffers: Vec<Capacity>, blocking: Blocking) -> Self {
        Self {
            node_count: buffers.len() + 1,
            buffers,
            blocking,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(SimError::InvalidSpec(
                "tandem needs at least one node".into(),
            ));
        }
        if !self.buffers.is_empty() && self.buffers.len() != self.node_count - 1 {
            return Err(SimError::InvalidSpec(format!(
                "tandem of {} nodes needs {} buffer capacities, got {}",
                self.node_count,
                self.node_count - 1,
                self.buffers.len()
            )));
        }
        Ok(())
    }

    /// Capacity of the buffer in front of node `n` (0-based); node 0 is unbounded.
    pub fn buffer(&self, n: usize) -> Capacity {
        if n == 0 {
            Capacity::Unbounded
        } else {
            self.buffers
                .get(n - 1)
                .copied()
                .unwrap_or(Capacity::Unbounded)
        }
    }

    pub fn all_unbounded(&self) -> bool {
        self.buffers.iter().all(|b| b.is_unbounded())
    }
}

/// A closed tandem: customers leaving the last node return to the first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedTandemSpec {
    /// Initial number of customers at each node.
    pub populations: Vec<usize>,
}

impl ClosedTandemSpec {
    pub fn new(populations: Vec<usize>) -> Self {
        Self { populations }
    }

    pub fn node_count(&self) -> usize {
        self.populations.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.populations.is_empty() {
            return Err(SimError::InvalidSpec(
                "closed tandem needs at least one node".into(),
            ));
        }
        if self.populations.iter().all(|&p| p == 0) {
            return Err(SimError::EmptyClosedSystem);
        }
        Ok(())
    }
}

pub(crate) fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(SimError::InvalidSpec("horizon must be positive".into()));
    }
    Ok(())
}

pub(crate) fn take<T>(seq: &[T], horizon: usize, role: Role, node: Option<usize>) -> Result<&[T]> {
    if seq.len() < horizon {
        return Err(SimError::InputLength {
            role,
            node,
            needed: horizon,
            got: seq.len(),
        });
    }
    Ok(&seq[..horizon])
}

/// `A_k = sum of the first k interarrival times`.
pub(crate) fn arrival_epochs<T: Scalar>(interarrivals: &[T]) -> Vec<T> {
    let mut acc = T::zero();
    interarrivals
        .iter()
        .map(|&a| {
            acc = acc + a;
            acc
        })
        .collect()
}

/// `A_k = A_{k-1} + α_k`, `D_k = (A_k ∨ D_{k-1}) + τ_k`, `A_0 = D_0 = 0`.
pub fn simulate_gg1(
    interarrivals: &DurationSequence,
    services: &DurationSequence,
    horizon: usize,
) -> Result<SamplePath> {
    gg1(&Exact, interarrivals, services, horizon)
}

pub(crate) fn gg1<O: Ops>(
    ops: &O,
    interarrivals: &[O::T],
    services: &[O::T],
    horizon: usize,
) -> Result<SamplePath<O::T>> {
    check_horizon(horizon)?;
    let alpha = take(interarrivals, horizon, Role::Interarrival, None)?;
    let tau = take(services, horizon, Role::Service, Some(0))?;
    let arrivals = arrival_epochs(alpha);
    let mut departures = Vec::with_capacity(horizon);
    let mut prev = O::T::zero();
    for (&a, &t) in arrivals.iter().zip(tau) {
        prev = ops.max(a, prev) + t;
        departures.push(prev);
    }
    Ok(SamplePath {
        arrivals: vec![arrivals],
        departures: vec![departures],
        completions: None,
        horizon,
    })
}

/// Open tandem; with finite buffers the selected blocking rule applies.
pub fn simulate_open_tandem(
    spec: &TandemSpec,
    interarrivals: &DurationSequence,
    services: &[DurationSequence],
    horizon: usize,
) -> Result<SamplePath> {
    let services: Vec<&[f64]> = services.iter().map(|s| &s[..]).collect();
    open_tandem(&Exact, spec, interarrivals, &services, horizon)
}

pub(crate) fn open_tandem<O: Ops>(
    ops: &O,
    spec: &TandemSpec,
    interarrivals: &[O::T],
    services: &[&[O::T]],
    horizon: usize,
) -> Result<SamplePath<O::T>> {
    spec.validate()?;
    check_horizon(horizon)?;
    let nodes = spec.node_count;
    let alpha = take(interarrivals, horizon, Role::Interarrival, None)?;
    let tau = node_services(services, nodes, horizon)?;
    let arrivals = arrival_epochs(alpha);
    // lag[n] = B_{n+1} + 1 for the buffer downstream of node n, when finite
    let lag: Vec<Option<usize>> = (0..nodes)
        .map(|n| {
            if n + 1 < nodes {
                spec.buffer(n + 1).finite().map(|b| b + 1)
            } else {
                None
            }
        })
        .collect();

    let mut dep: Vec<Vec<O::T>> = vec![Vec::with_capacity(horizon); nodes];
    for k in 0..horizon {
        for n in 0..nodes {
            let upstream = if n == 0 { arrivals[k] } else { dep[n - 1][k] };
            let prev = if k == 0 { O::T::zero() } else { dep[n][k - 1] };
            // D_{k-B_{n+1}-1}^{n+1}, present only when that customer index is positive
            let blocker = lag[n].and_then(|l| k.checked_sub(l)).map(|j| dep[n + 1][j]);
            let mut start = ops.max(upstream, prev);
            let d = match (spec.blocking, blocker) {
                (_, None) => start + tau[n][k],
                (Blocking::Communication, Some(b)) => {
                    start = ops.max(start, b);
                    start + tau[n][k]
                }
                (Blocking::Manufacturing, Some(b)) => ops.max(start + tau[n][k], b),
            };
            dep[n].push(d);
        }
    }

    let mut node_arrivals = Vec::with_capacity(nodes);
    node_arrivals.push(arrivals);
    node_arrivals.extend(dep[..nodes - 1].iter().cloned());
    Ok(SamplePath {
        arrivals: node_arrivals,
        departures: dep,
        completions: None,
        horizon,
    })
}

/// Closed tandem with initial populations `K_n`:
/// `D_k^n = (D_{k-K_n}^{n-1} ∨ D_{k-1}^n) + τ_k^n`, node 0's predecessor being the last node.
pub fn simulate_closed_tandem(
    spec: &ClosedTandemSpec,
    services: &[DurationSequence],
    horizon: usize,
) -> Result<SamplePath> {
    let services: Vec<&[f64]> = services.iter().map(|s| &s[..]).collect();
    closed_tandem(&Exact, spec, &services, horizon)
}

pub(crate) fn closed_tandem<O: Ops>(
    ops: &O,
    spec: &ClosedTandemSpec,
    services: &[&[O::T]],
    horizon: usize,
) -> Result<SamplePath<O::T>> {
    spec.validate()?;
    check_horizon(horizon)?;
    let nodes = spec.node_count();
    let pops = &spec.populations;
    let tau = node_services(services, nodes, horizon)?;
    // Within a row, a node with K_n = 0 needs its predecessor's value from the
    // same row, so the sweep starts at a node holding an initial customer.
    let first = pops
        .iter()
        .position(|&p| p > 0)
        .expect("validated nonempty");
    let order: Vec<usize> = (0..nodes).map(|i| (first + i) % nodes).collect();

    let mut dep: Vec<Vec<O::T>> = vec![Vec::with_capacity(horizon); nodes];
    for k in 0..horizon {
        for &n in &order {
            let pred = (n + nodes - 1) % nodes;
            let prev = if k == 0 { O::T::zero() } else { dep[n][k - 1] };
            // customer index k+1-K_n; zero or below means an initial customer
            let start = match (k + 1).checked_sub(pops[n]) {
                Some(j) if j >= 1 => ops.max(dep[pred][j - 1], prev),
                _ => prev,
            };
            dep[n].push(start + tau[n][k]);
        }
    }

    let arrivals = (0..nodes)
        .map(|n| {
            let pred = (n + nodes - 1) % nodes;
            (0..horizon)
                .map(|k| {
                    if k < pops[n] {
                        O::T::zero()
                    } else {
                        dep[pred][k - pops[n]]
                    }
                })
                .collect()
        })
        .collect();
    Ok(SamplePath {
        arrivals,
        departures: dep,
        completions: None,
        horizon,
    })
}

pub(crate) fn node_services<'a, T>(
    services: &[&'a [T]],
    nodes: usize,
    horizon: usize,
) -> Result<Vec<&'a [T]>> {
    (0..nodes)
        .map(|n| {
            let seq = services.get(n).ok_or(SimError::MissingNode(n))?;
            take(seq, horizon, Role::Service, Some(n))
        })
        .collect()
}
