//! The G/G/m queue: completion epochs `C_k` in arrival order and sorted
//! departure epochs `D_k`.
//!
//! ```text
//! A_k = A_{k-1} + α_k
//! C_k = (A_k ∨ D_{k-m}) + τ_k
//! D_k = min over k-subsets J of {1..k+m-2} of (max_{j∈J} C_j)  ∧  C_{k+m-1}
//! ```
//!
//! The minimum over k-subsets of subset maxima is the k-th smallest of
//! `C_1..C_{k+m-2}`; [`simulate_ggm`] evaluates it with a heap of the
//! completions not yet departed. [`departure_bruteforce`] enumerates the
//! subsets literally and is kept as an oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::algebra::{Exact, Ops, Scalar};
use crate::error::{Result, SimError};
use crate::recursions::{arrival_epochs, check_horizon, take};
use crate::types::{DurationSequence, Epoch, Role, SamplePath};

/// Largest number of subsets the brute-force oracles will enumerate.
pub const SUBSET_GUARD: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GGmSpec {
    pub servers: usize,
}

impl GGmSpec {
    pub fn new(servers: usize) -> Self {
        Self { servers }
    }

    pub fn validate(&self) -> Result<()> {
        if self.servers == 0 {
            return Err(SimError::InvalidSpec(
                "G/G/m needs at least one server".into(),
            ));
        }
        Ok(())
    }
}

pub fn simulate_ggm(
    spec: &GGmSpec,
    interarrivals: &DurationSequence,
    services: &DurationSequence,
    horizon: usize,
) -> Result<SamplePath> {
    ggm(&Exact, spec, interarrivals, services, horizon)
}

/// Heap entry ordered so that `BinaryHeap` pops the smallest value first,
/// lowest customer index on equal values.
struct Pending<T> {
    value: f64,
    index: usize,
    epoch: T,
}

impl<T> PartialEq for Pending<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for Pending<T> {}

impl<T> PartialOrd for Pending<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Pending<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .value
            .total_cmp(&self.value)
            .then_with(|| other.index.cmp(&self.index))
    }
}

pub(crate) fn ggm<O: Ops>(
    ops: &O,
    spec: &GGmSpec,
    interarrivals: &[O::T],
    services: &[O::T],
    horizon: usize,
) -> Result<SamplePath<O::T>> {
    spec.validate()?;
    check_horizon(horizon)?;
    let m = spec.servers;
    let alpha = take(interarrivals, horizon, Role::Interarrival, None)?;
    let tau = take(services, horizon, Role::Service, Some(0))?;
    let arrivals = arrival_epochs(alpha);

    let mut completions: Vec<O::T> = Vec::with_capacity(horizon);
    let mut departures: Vec<O::T> = Vec::with_capacity(horizon);
    let mut departed = vec![false; horizon];
    let mut heap: BinaryHeap<Pending<O::T>> = BinaryHeap::with_capacity(m + 1);
    let mut pushed = 0usize;

    for k in 0..horizon {
        // 0-based: the subset range is C[0..=k+m-2], the tail term is C[k+m-1].
        let newest = k + m - 1;
        while completions.len() <= newest.min(horizon - 1) {
            let j = completions.len();
            let freed = if j >= m {
                departures[j - m]
            } else {
                O::T::zero()
            };
            completions.push(ops.max(arrivals[j], freed) + tau[j]);
        }
        while pushed < (newest).min(horizon) {
            if !departed[pushed] {
                let c = completions[pushed];
                heap.push(Pending {
                    value: c.value(),
                    index: pushed,
                    epoch: c,
                });
            }
            pushed += 1;
        }
        let tail = (newest < horizon).then(|| completions[newest]);
        let d = match (heap.peek(), tail) {
            (Some(top), Some(c)) => {
                let d = ops.min(top.epoch, c);
                if c.value() < top.value {
                    departed[newest] = true;
                } else {
                    heap.pop();
                }
                d
            }
            (Some(_), None) => heap.pop().expect("peeked").epoch,
            (None, Some(c)) => {
                departed[newest] = true;
                c
            }
            (None, None) => unreachable!("k-th customer always has a completion"),
        };
        departures.push(d);
    }

    Ok(SamplePath {
        arrivals: vec![arrivals],
        departures: vec![departures],
        completions: Some(completions),
        horizon,
    })
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| {
        acc.saturating_mul((n - i) as u128) / (i as u128 + 1)
    })
}

/// Evaluates the departure formula for 1-based `k` by enumerating every
/// k-subset of `{1..k+m-2}`. Completions past the end of `completions` are `+inf`.
pub fn departure_bruteforce(completions: &[Epoch], servers: usize, k: usize) -> Result<Epoch> {
    if servers == 0 || k == 0 {
        return Err(SimError::InvalidParameter(
            "departure index and server count must be positive".into(),
        ));
    }
    let pool = k + servers - 2;
    let needed = binomial(pool, k);
    if needed > SUBSET_GUARD {
        return Err(SimError::EnumerationGuard {
            needed,
            guard: SUBSET_GUARD,
        });
    }
    let at = |i: usize| completions.get(i).copied().unwrap_or(f64::INFINITY);
    let best = (0..pool)
        .combinations(k)
        .map(|subset| subset.into_iter().map(at).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);
    Ok(best.min(at(pool)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recursions::simulate_gg1;

    fn inter(v: &[f64]) -> DurationSequence {
        DurationSequence::interarrivals(v.to_vec()).unwrap()
    }
    fn serv(v: &[f64]) -> DurationSequence {
        DurationSequence::services(v.to_vec()).unwrap()
    }

    #[test]
    fn two_servers_by_hand() {
        let p = simulate_ggm(
            &GGmSpec::new(2),
            &inter(&[0.0; 3]),
            &serv(&[3.0, 1.0, 1.0]),
            3,
        )
        .unwrap();
        assert_eq!(p.completions.as_deref(), Some(&[3.0, 1.0, 2.0][..]));
        assert_eq!(p.departures[0], vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn single_server_reduces_to_gg1() {
        let a = inter(&[0.5, 2.0, 0.1, 0.3, 1.0]);
        let s = serv(&[1.0, 0.2, 0.7, 2.0, 0.1]);
        let multi = simulate_ggm(&GGmSpec::new(1), &a, &s, 5).unwrap();
        let single = simulate_gg1(&a, &s, 5).unwrap();
        assert_eq!(multi.departures, single.departures);
        assert_eq!(multi.completions.unwrap(), single.departures[0]);
    }

    #[test]
    fn zero_servers_rejected() {
        let err = simulate_ggm(&GGmSpec::new(0), &inter(&[1.0]), &serv(&[1.0]), 1).unwrap_err();
        assert!(matches!(err, SimError::InvalidSpec(_)));
    }

    #[test]
    fn bruteforce_by_hand() {
        assert_eq!(departure_bruteforce(&[3.0, 1.0], 2, 1).unwrap(), 1.0);
        assert_eq!(departure_bruteforce(&[3.0, 1.0, 2.0], 2, 2).unwrap(), 2.0);
        // absent completions are +inf
        assert_eq!(departure_bruteforce(&[3.0, 1.0, 2.0], 2, 3).unwrap(), 3.0);
    }

    #[test]
    fn bruteforce_guard() {
        let c = vec![1.0; 64];
        let err = departure_bruteforce(&c, 30, 20).unwrap_err();
        assert!(matches!(err, SimError::EnumerationGuard { .. }));
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(10, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(20, 10), 184_756);
    }
}
