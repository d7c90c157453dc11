//! Networks of single-server FCFS nodes with deterministic routing.
//!
//! Node `n` serves its k-th arrival for `τ_k^n`:
//!
//! ```text
//! D_k^n = (A_k^n ∨ D_{k-1}^n) + τ_k^n
//! A_k^n = 0                 if k <= K_n
//!       = 𝒜_{k-K_n}^n       otherwise
//! ```
//!
//! where `𝒜_j^n` is the minimum over j-subsets of `𝒟_n` (departures routed to
//! `n`) of the subset maximum, which is the j-th smallest element of `𝒟_n`.
//!
//! Departures are produced in chronological order, so `𝒟_n` grows sorted and
//! each order statistic is final once it is read. A node stops serving once it
//! has produced its horizon's worth of departures.

use serde::{Deserialize, Serialize};

use itertools::Itertools;

use crate::algebra::{Exact, Ops, Scalar};
use crate::error::{Result, SimError};
use crate::multiserver::{binomial, SUBSET_GUARD};
use crate::recursions::{take, ClosedTandemSpec, TandemSpec};
use crate::types::{Capacity, DurationSequence, Epoch, Role, SamplePath};

/// Where the successive departures of one node are sent (0-based node indices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingRule {
    /// `s_{n1}, s_{n2}, ...` listed for every departure.
    Explicit(Vec<usize>),
    /// A finite pattern cycled indefinitely.
    Periodic(Vec<usize>),
}

impl RoutingRule {
    pub fn always(node: usize) -> Self {
        RoutingRule::Periodic(vec![node])
    }

    /// Destination of departure `k` (0-based).
    pub fn target(&self, k: usize) -> Option<usize> {
        match self {
            RoutingRule::Explicit(list) => list.get(k).copied(),
            RoutingRule::Periodic(pattern) if !pattern.is_empty() => {
                Some(pattern[k % pattern.len()])
            }
            RoutingRule::Periodic(_) => None,
        }
    }

    fn entries(&self) -> &[usize] {
        match self {
            RoutingRule::Explicit(v) | RoutingRule::Periodic(v) => v,
        }
    }
}

/// One routing rule per node; the rows of the routing matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoutingPlan(pub Vec<RoutingRule>);

impl RoutingPlan {
    pub fn rule(&self, node: usize) -> &RoutingRule {
        &self.0[node]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    /// Initial number of customers waiting at each node.
    pub populations: Vec<Capacity>,
    pub routing: RoutingPlan,
    /// Per-node horizons used when the network runs as part of a [`crate::ModelSpec`];
    /// every node defaults to the run horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<usize>>,
}

impl NetworkSpec {
    pub fn new(populations: Vec<Capacity>, routing: Vec<RoutingRule>) -> Self {
        Self {
            populations,
            routing: RoutingPlan(routing),
            horizons: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.populations.len()
    }

    /// Validates structure and that every explicit rule covers `horizons`.
    pub fn validate(&self, horizons: &[usize]) -> Result<()> {
        let nodes = self.node_count();
        if nodes == 0 {
            return Err(SimError::InvalidSpec(
                "network needs at least one node".into(),
            ));
        }
        if self.routing.0.len() != nodes {
            return Err(SimError::InvalidSpec(format!(
                "{} routing rules for {nodes} nodes",
                self.routing.0.len()
            )));
        }
        if horizons.len() != nodes {
            return Err(SimError::InvalidSpec(format!(
                "{} horizons for {nodes} nodes",
                horizons.len()
            )));
        }
        if self.populations.iter().all(|&p| p == Capacity::Finite(0)) {
            return Err(SimError::EmptyClosedSystem);
        }
        for (n, rule) in self.routing.0.iter().enumerate() {
            if let Some(&bad) = rule.entries().iter().find(|&&t| t >= nodes) {
                return Err(SimError::NodeOutOfRange {
                    node: bad,
                    count: nodes,
                });
            }
            match rule {
                RoutingRule::Periodic(p) if p.is_empty() => {
                    return Err(SimError::InvalidSpec(format!(
                        "node {n} has an empty routing pattern"
                    )));
                }
                RoutingRule::Explicit(list) if list.len() < horizons[n] => {
                    return Err(SimError::RoutingExhausted {
                        node: n,
                        departure: list.len() + 1,
                    });
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Simulates the network until node `n` has produced `horizons[n]` departures.
pub fn simulate_network(
    spec: &NetworkSpec,
    services: &[DurationSequence],
    horizons: &[usize],
) -> Result<SamplePath> {
    let services: Vec<&[f64]> = services.iter().map(|s| &s[..]).collect();
    network(&Exact, spec, &services, horizons)
}

pub(crate) fn network<O: Ops>(
    ops: &O,
    spec: &NetworkSpec,
    services: &[&[O::T]],
    horizons: &[usize],
) -> Result<SamplePath<O::T>> {
    spec.validate(horizons)?;
    let nodes = spec.node_count();
    let tau: Vec<&[O::T]> = (0..nodes)
        .map(|n| {
            let seq = services.get(n).ok_or(SimError::MissingNode(n))?;
            take(seq, horizons[n], Role::Service, Some(n))
        })
        .collect::<Result<_>>()?;

    let mut arrivals: Vec<Vec<O::T>> = horizons.iter().map(|&h| Vec::with_capacity(h)).collect();
    let mut departures: Vec<Vec<O::T>> = horizons.iter().map(|&h| Vec::with_capacity(h)).collect();
    // 𝒟_n in the order departures were produced, which is nondecreasing
    let mut routed: Vec<Vec<O::T>> = vec![Vec::new(); nodes];
    // (arrival, departure) of each node's next service, once its arrival is known
    let mut next: Vec<Option<(O::T, O::T)>> = vec![None; nodes];

    loop {
        let mut best: Option<usize> = None;
        for n in 0..nodes {
            let k = departures[n].len();
            if k >= horizons[n] {
                continue;
            }
            if next[n].is_none() {
                let arrival = match spec.populations[n] {
                    Capacity::Unbounded => Some(O::T::zero()),
                    Capacity::Finite(pop) if k < pop => Some(O::T::zero()),
                    Capacity::Finite(pop) => routed[n].get(k - pop).copied(),
                };
                if let Some(a) = arrival {
                    let prev = departures[n].last().copied().unwrap_or_else(O::T::zero);
                    next[n] = Some((a, ops.max(a, prev) + tau[n][k]));
                }
            }
            if let Some((_, d)) = next[n] {
                let better = match best {
                    None => true,
                    Some(b) => d.value() < next[b].expect("candidate").1.value(),
                };
                if better {
                    best = Some(n);
                }
            }
        }

        let Some(n) = best else { break };
        let (a, d) = next[n].take().expect("candidate");
        let k = departures[n].len();
        arrivals[n].push(a);
        departures[n].push(d);
        let target = spec
            .routing
            .rule(n)
            .target(k)
            .ok_or(SimError::RoutingExhausted {
                node: n,
                departure: k + 1,
            })?;
        debug_assert!(routed[target].last().is_none_or(|l| l.value() <= d.value()));
        routed[target].push(d);
    }

    let produced: Vec<usize> = departures.iter().map(Vec::len).collect();
    let stalled: Vec<usize> = (0..nodes).filter(|&n| produced[n] < horizons[n]).collect();
    if !stalled.is_empty() {
        let saturated: Vec<usize> = (0..nodes)
            .filter(|&n| produced[n] >= horizons[n])
            .filter(|&n| match spec.populations[n] {
                Capacity::Unbounded => true,
                Capacity::Finite(pop) => pop + routed[n].len() > produced[n],
            })
            .collect();
        return Err(if saturated.is_empty() {
            SimError::Deadlock { stalled, produced }
        } else {
            SimError::UnderSpecifiedHorizon {
                stalled,
                saturated,
                produced,
            }
        });
    }

    Ok(SamplePath {
        arrivals,
        departures,
        completions: None,
        horizon: horizons.iter().copied().max().unwrap_or(0),
    })
}

/// `𝒜_k`: minimum over k-subsets of `set` of the subset maximum, by enumeration.
pub fn arrival_epoch_bruteforce(set: &[Epoch], k: usize) -> Result<Epoch> {
    if k == 0 || set.len() < k {
        return Err(SimError::InsufficientElements {
            needed: k.max(1),
            got: set.len(),
        });
    }
    let needed = binomial(set.len(), k);
    if needed > SUBSET_GUARD {
        return Err(SimError::EnumerationGuard {
            needed,
            guard: SUBSET_GUARD,
        });
    }
    Ok(set
        .iter()
        .copied()
        .combinations(k)
        .map(|s| s.into_iter().fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min))
}

/// `𝒟_n` for every node: the departure epochs of `path` routed to `n`, sorted.
pub fn routed_departures(spec: &NetworkSpec, path: &SamplePath) -> Result<Vec<Vec<Epoch>>> {
    let mut sets: Vec<Vec<f64>> = vec![Vec::new(); spec.node_count()];
    for (i, deps) in path.departures.iter().enumerate() {
        for (k, &d) in deps.iter().enumerate() {
            let t = spec
                .routing
                .rule(i)
                .target(k)
                .ok_or(SimError::RoutingExhausted {
                    node: i,
                    departure: k + 1,
                })?;
            sets[t].push(d);
        }
    }
    for s in &mut sets {
        s.sort_by(f64::total_cmp);
    }
    Ok(sets)
}

/// Recomputes every network equation from a finished path, building `𝒟_n`
/// from the path's own departures and selecting order statistics by sorting.
/// Returns the largest absolute residual.
pub fn network_residual(
    spec: &NetworkSpec,
    services: &[DurationSequence],
    path: &SamplePath,
) -> Result<f64> {
    let sets = routed_departures(spec, path)?;
    let mut worst = 0.0f64;
    for (n, set) in sets.iter().enumerate() {
        let deps = &path.departures[n];
        let tau = services.get(n).ok_or(SimError::MissingNode(n))?;
        let mut prev = 0.0;
        for (k, &d) in deps.iter().enumerate() {
            let a = match spec.populations[n] {
                Capacity::Unbounded => 0.0,
                Capacity::Finite(pop) if k < pop => 0.0,
                Capacity::Finite(pop) => {
                    *set.get(k - pop).ok_or(SimError::InsufficientElements {
                        needed: k - pop + 1,
                        got: set.len(),
                    })?
                }
            };
            let expected = a.max(prev) + tau[k];
            worst = worst
                .max((expected - d).abs())
                .max((a - path.arrivals[n][k]).abs());
            prev = d;
        }
    }
    Ok(worst)
}

/// A tandem re-expressed as a network: node 0 is a source with an unbounded
/// population whose service times are the interarrival gaps; tandem node `i`
/// becomes network node `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEncoding {
    pub spec: NetworkSpec,
    pub services: Vec<DurationSequence>,
    pub horizons: Vec<usize>,
    pub source: usize,
}

impl NetworkEncoding {
    /// Departure sequences of the original tandem nodes.
    pub fn tandem_departures<'a>(&self, path: &'a SamplePath) -> &'a [Vec<Epoch>] {
        &path.departures[self.source + 1..]
    }
}

pub fn tandem_as_network(
    tandem: &TandemSpec,
    interarrivals: &DurationSequence,
    services: &[DurationSequence],
    horizon: usize,
) -> Result<NetworkEncoding> {
    tandem.validate()?;
    if !tandem.all_unbounded() {
        return Err(SimError::UnsupportedMapping(
            "finite-buffer tandems have no deterministic-routing network form".into(),
        ));
    }
    let nodes = tandem.node_count;
    let mut populations = vec![Capacity::Unbounded];
    populations.extend(std::iter::repeat_n(Capacity::Finite(0), nodes));
    // source -> 1 -> 2 -> ... -> N -> source
    let routing: Vec<RoutingRule> = (0..=nodes)
        .map(|n| RoutingRule::always((n + 1) % (nodes + 1)))
        .collect();
    let source_services = DurationSequence::services(
        take(interarrivals, horizon, Role::Interarrival, None)?.to_vec(),
    )?;
    let mut all_services = vec![source_services];
    for n in 0..nodes {
        let s = services.get(n).ok_or(SimError::MissingNode(n))?;
        all_services.push(s.clone());
    }
    Ok(NetworkEncoding {
        spec: NetworkSpec::new(populations, routing),
        services: all_services,
        horizons: vec![horizon; nodes + 1],
        source: 0,
    })
}

/// A closed tandem is the network with cyclic routing `n -> n+1 -> ... -> 1`.
pub fn closed_tandem_as_network(tandem: &ClosedTandemSpec) -> Result<NetworkSpec> {
    tandem.validate()?;
    let nodes = tandem.node_count();
    Ok(NetworkSpec::new(
        tandem
            .populations
            .iter()
            .map(|&p| Capacity::Finite(p))
            .collect(),
        (0..nodes)
            .map(|n| RoutingRule::always((n + 1) % nodes))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recursions::{simulate_gg1, simulate_open_tandem};

    fn serv(v: &[f64]) -> DurationSequence {
        DurationSequence::services(v.to_vec()).unwrap()
    }

    fn two_cycle() -> NetworkSpec {
        NetworkSpec::new(
            vec![Capacity::Finite(1), Capacity::Finite(0)],
            vec![RoutingRule::always(1), RoutingRule::always(0)],
        )
    }

    #[test]
    fn cyclic_routing_realizes_closed_tandem() {
        let p =
            simulate_network(&two_cycle(), &[serv(&[1.0; 3]), serv(&[2.0; 3])], &[3, 3]).unwrap();
        assert_eq!(p.departures[0], vec![1.0, 4.0, 7.0]);
        assert_eq!(p.departures[1], vec![3.0, 6.0, 9.0]);
    }

    #[test]
    fn self_loop() {
        let spec = NetworkSpec::new(vec![Capacity::Finite(1)], vec![RoutingRule::always(0)]);
        let p = simulate_network(&spec, &[serv(&[2.0, 3.0])], &[2]).unwrap();
        assert_eq!(p.departures[0], vec![2.0, 5.0]);
    }

    #[test]
    fn arrival_bruteforce_by_hand() {
        assert_eq!(arrival_epoch_bruteforce(&[3.0, 1.0, 2.0], 2).unwrap(), 2.0);
        assert_eq!(arrival_epoch_bruteforce(&[5.0], 1).unwrap(), 5.0);
        assert!(matches!(
            arrival_epoch_bruteforce(&[5.0], 2),
            Err(SimError::InsufficientElements { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn starving_node_is_reported() {
        // node 1 keeps every customer, node 0 never gets one back
        let spec = NetworkSpec::new(
            vec![Capacity::Finite(1), Capacity::Finite(0)],
            vec![RoutingRule::always(1), RoutingRule::always(1)],
        );
        let err =
            simulate_network(&spec, &[serv(&[1.0; 2]), serv(&[1.0; 2])], &[2, 2]).unwrap_err();
        assert_eq!(
            err,
            SimError::UnderSpecifiedHorizon {
                stalled: vec![0],
                saturated: vec![1],
                produced: vec![1, 2],
            }
        );
    }

    #[test]
    fn short_horizon_is_under_specified() {
        // node 0 stops after one departure while node 1 waits for a second
        let spec = NetworkSpec::new(
            vec![Capacity::Finite(2), Capacity::Finite(0)],
            vec![RoutingRule::always(1), RoutingRule::always(0)],
        );
        let err =
            simulate_network(&spec, &[serv(&[1.0; 2]), serv(&[1.0; 2])], &[1, 2]).unwrap_err();
        assert!(
            matches!(err, SimError::UnderSpecifiedHorizon { ref saturated, .. } if saturated == &[0])
        );
    }

    #[test]
    fn explicit_routing_must_cover_horizon() {
        let spec = NetworkSpec::new(
            vec![Capacity::Finite(1)],
            vec![RoutingRule::Explicit(vec![0])],
        );
        let err = simulate_network(&spec, &[serv(&[1.0; 3])], &[3]).unwrap_err();
        assert_eq!(
            err,
            SimError::RoutingExhausted {
                node: 0,
                departure: 2
            }
        );
    }

    #[test]
    fn bad_target_rejected() {
        let spec = NetworkSpec::new(vec![Capacity::Finite(1)], vec![RoutingRule::always(3)]);
        let err = simulate_network(&spec, &[serv(&[1.0])], &[1]).unwrap_err();
        assert_eq!(err, SimError::NodeOutOfRange { node: 3, count: 1 });
    }

    #[test]
    fn tandem_encoding_matches_tandem_engine() {
        let a = DurationSequence::interarrivals(vec![1.0, 1.0]).unwrap();
        let s = vec![serv(&[1.0, 1.0]), serv(&[3.0, 1.0])];
        let enc = tandem_as_network(&TandemSpec::unbounded(2), &a, &s, 2).unwrap();
        let p = simulate_network(&enc.spec, &enc.services, &enc.horizons).unwrap();
        assert_eq!(enc.tandem_departures(&p), &[vec![2.0, 3.0], vec![5.0, 6.0]]);
        let direct = simulate_open_tandem(&TandemSpec::unbounded(2), &a, &s, 2).unwrap();
        assert_eq!(enc.tandem_departures(&p), &direct.departures[..]);
        assert_eq!(network_residual(&enc.spec, &enc.services, &p).unwrap(), 0.0);

        let enc1 = tandem_as_network(&TandemSpec::unbounded(1), &a, &s[..1], 2).unwrap();
        let p1 = simulate_network(&enc1.spec, &enc1.services, &enc1.horizons).unwrap();
        assert_eq!(
            enc1.tandem_departures(&p1),
            &simulate_gg1(&a, &s[0], 2).unwrap().departures[..]
        );
    }

    #[test]
    fn finite_buffers_cannot_be_encoded() {
        let a = DurationSequence::interarrivals(vec![1.0]).unwrap();
        let spec = TandemSpec::with_buffers(vec![Capacity::Finite(1)], Default::default());
        let err = tandem_as_network(&spec, &a, &[serv(&[1.0]), serv(&[1.0])], 1).unwrap_err();
        assert!(matches!(err, SimError::UnsupportedMapping(_)));
    }

    #[test]
    fn closed_tandem_encoding() {
        let spec = closed_tandem_as_network(&ClosedTandemSpec::new(vec![1, 0])).unwrap();
        assert_eq!(spec, two_cycle());
    }
}
