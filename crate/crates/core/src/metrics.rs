//! Sample performance measures of a finished path.
//!
//! All functions are generic over [`Scalar`], so the same formulas yield
//! plain values on a [`SamplePath`] and pathwise derivatives on a path of
//! [`crate::TangentEpoch`]s.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::Scalar;
use crate::error::{Result, SimError};
use crate::model::{ModelInputs, ModelSpec};
use crate::types::SamplePath;

/// Node-level averages over the first `K` customers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeMetrics<T = f64> {
    /// Average total time per customer.
    pub s: T,
    /// Average waiting time.
    pub w: T,
    /// Throughput rate.
    pub t: T,
    /// Utilization (pooled over servers for multi-server nodes).
    pub u: T,
    /// Time-average number at the node.
    pub j: T,
    /// Time-average queue length.
    pub q: T,
    /// `u / m` for a multi-server node.
    pub u_per_server: Option<T>,
}

/// Customer-level averages of a tandem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemMetrics<T = f64> {
    pub s: T,
    pub w: T,
}

fn clamp_nonnegative<T: Scalar>(x: T) -> T {
    // exact-arithmetic value is >= 0; only rounding can push it below
    if x.value() < 0.0 {
        T::zero()
    } else {
        x
    }
}

fn sum<T: Scalar>(it: impl Iterator<Item = T>) -> T {
    it.fold(T::zero(), |a, b| a + b)
}

fn node_slices<T>(path: &SamplePath<T>, node: usize, horizon: usize) -> Result<(&[T], &[T])> {
    let count = path.node_count();
    if node >= count {
        return Err(SimError::NodeOutOfRange { node, count });
    }
    let (a, d) = (&path.arrivals[node], &path.departures[node]);
    let len = a.len().min(d.len());
    if horizon == 0 || horizon > len {
        return Err(SimError::HorizonTooLong { horizon, len });
    }
    Ok((&a[..horizon], &d[..horizon]))
}

fn ratios<T: Scalar>(
    start: &[T],
    finish: &[T],
    services: &[T],
    span: T,
    node: usize,
) -> Result<NodeMetrics<T>> {
    let horizon = start.len();
    if services.len() < horizon {
        return Err(SimError::HorizonTooLong {
            horizon,
            len: services.len(),
        });
    }
    if span.value() <= 0.0 {
        return Err(SimError::UndefinedThroughput { node });
    }
    let k = T::constant(horizon as f64);
    let total = sum(start.iter().zip(finish).map(|(&a, &d)| d - a));
    let waiting = sum(start
        .iter()
        .zip(finish)
        .zip(services)
        .map(|((&a, &d), &t)| clamp_nonnegative(d - a - t)));
    let busy = sum(services[..horizon].iter().copied());
    Ok(NodeMetrics {
        s: total / k,
        w: waiting / k,
        t: k / span,
        u: busy / span,
        j: total / span,
        q: waiting / span,
        u_per_server: None,
    })
}

/// `S, W, T, U, J, Q` of node `node` over the first `horizon` customers.
pub fn node_metrics<T: Scalar>(
    path: &SamplePath<T>,
    node: usize,
    services: &[T],
    horizon: usize,
) -> Result<NodeMetrics<T>> {
    let (a, d) = node_slices(path, node, horizon)?;
    ratios(a, d, services, d[horizon - 1], node)
}

/// Multi-server measures: completions replace departures in `S, W, J, Q`,
/// while `T` and `U` keep the K-th departure epoch in the denominator.
pub fn multiserver_metrics<T: Scalar>(
    path: &SamplePath<T>,
    services: &[T],
    servers: usize,
    horizon: usize,
) -> Result<NodeMetrics<T>> {
    let completions = path
        .completions
        .as_deref()
        .ok_or(SimError::MissingCompletions)?;
    let (a, d) = node_slices(path, 0, horizon)?;
    if completions.len() < horizon {
        return Err(SimError::HorizonTooLong {
            horizon,
            len: completions.len(),
        });
    }
    let mut m = ratios(a, &completions[..horizon], services, d[horizon - 1], 0)?;
    m.u_per_server = Some(m.u / T::constant(servers as f64));
    Ok(m)
}

/// Node measures restricted to customers `lo..hi` (0-based, `hi` exclusive).
/// Time averages are taken over the span from departure `lo - 1` (or time
/// zero) to departure `hi - 1`; with `lo = 0` this is [`node_metrics`] or
/// [`multiserver_metrics`].
pub fn window_metrics<T: Scalar>(
    path: &SamplePath<T>,
    node: usize,
    services: &[T],
    servers: Option<usize>,
    lo: usize,
    hi: usize,
) -> Result<NodeMetrics<T>> {
    if lo >= hi {
        return Err(SimError::InvalidParameter(format!(
            "empty customer window {lo}..{hi}"
        )));
    }
    let (a, d) = node_slices(path, node, hi)?;
    let origin = if lo == 0 { T::zero() } else { d[lo - 1] };
    let span = d[hi - 1] - origin;
    if services.len() < hi {
        return Err(SimError::HorizonTooLong {
            horizon: hi,
            len: services.len(),
        });
    }
    match servers {
        None => ratios(&a[lo..hi], &d[lo..hi], &services[lo..hi], span, node),
        Some(m) => {
            let c = path
                .completions
                .as_deref()
                .ok_or(SimError::MissingCompletions)?;
            if c.len() < hi {
                return Err(SimError::HorizonTooLong {
                    horizon: hi,
                    len: c.len(),
                });
            }
            let mut out = ratios(&a[lo..hi], &c[lo..hi], &services[lo..hi], span, node)?;
            out.u_per_server = Some(out.u / T::constant(m as f64));
            Ok(out)
        }
    }
}

/// Average system time and waiting time of a tandem (`D_k = D_k^N`).
pub fn system_metrics<T: Scalar>(
    path: &SamplePath<T>,
    services: &[Vec<T>],
    horizon: usize,
) -> Result<SystemMetrics<T>> {
    let last = path
        .node_count()
        .checked_sub(1)
        .ok_or(SimError::MissingNode(0))?;
    let (a, _) = node_slices(path, 0, horizon)?;
    let (_, d) = node_slices(path, last, horizon)?;
    if services.len() < path.node_count() {
        return Err(SimError::MissingNode(services.len()));
    }
    for (n, s) in services.iter().enumerate().take(path.node_count()) {
        if s.len() < horizon {
            return Err(SimError::InputLength {
                role: crate::types::Role::Service,
                node: Some(n),
                needed: horizon,
                got: s.len(),
            });
        }
    }
    let k = T::constant(horizon as f64);
    let total = sum(a.iter().zip(d).map(|(&a, &d)| d - a));
    let waiting = sum((0..horizon).map(|i| {
        let served = sum(services.iter().take(path.node_count()).map(|s| s[i]));
        clamp_nonnegative(d[i] - a[i] - served)
    }));
    Ok(SystemMetrics {
        s: total / k,
        w: waiting / k,
    })
}

/// Average idle time `Σ (D_k^n − (D_k^{n−1} ∨ D_{k−1}^n) − τ_k^n) / K` of a
/// tandem server; for node 0 the upstream departure is the system arrival.
pub fn idle_time<T: Scalar>(
    path: &SamplePath<T>,
    node: usize,
    services: &[T],
    horizon: usize,
) -> Result<T> {
    let (upstream, d) = node_slices(path, node, horizon)?;
    if services.len() < horizon {
        return Err(SimError::HorizonTooLong {
            horizon,
            len: services.len(),
        });
    }
    let mut prev = T::zero();
    let mut acc = T::zero();
    for i in 0..horizon {
        acc = acc + clamp_nonnegative(d[i] - upstream[i].sup(prev) - services[i]);
        prev = d[i];
    }
    Ok(acc / T::constant(horizon as f64))
}

/// Names of the node-level measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeMeasure {
    S,
    W,
    T,
    U,
    J,
    Q,
    /// Utilization divided by the server count.
    UPerServer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemMeasure {
    S,
    W,
}

/// A scalar sample measure selected by name.
///
/// Textual forms: `S[0]`, `W[1]`, `T[0]`, `U[0]`, `J[0]`, `Q[0]`, `Um[0]`,
/// `I[1]` (idle time), `system.S`, `system.W`. Node indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Measure {
    Node { measure: NodeMeasure, node: usize },
    System(SystemMeasure),
    Idle { node: usize },
}

impl Measure {
    pub fn node(measure: NodeMeasure, node: usize) -> Self {
        Measure::Node { measure, node }
    }

    /// The node a node-level or idle measure refers to.
    pub fn node_index(&self) -> Option<usize> {
        match *self {
            Measure::Node { node, .. } | Measure::Idle { node } => Some(node),
            Measure::System(_) => None,
        }
    }

    /// Evaluates the measure on a finished path of `model`; node measures use
    /// every departure the path holds for that node.
    pub fn evaluate<T: Scalar>(
        &self,
        model: &ModelSpec,
        path: &SamplePath<T>,
        inputs: &ModelInputs<T>,
    ) -> Result<T> {
        let unsupported = |reason: &str| SimError::UnsupportedMeasure {
            measure: self.to_string(),
            reason: reason.into(),
        };
        let services = |node: usize| -> Result<&[T]> {
            inputs
                .services
                .get(node)
                .map(Vec::as_slice)
                .ok_or(SimError::MissingNode(node))
        };
        match *self {
            Measure::Node { measure, node } => {
                let horizon = path.departures.get(node).map_or(0, Vec::len);
                let m = match model {
                    ModelSpec::Ggm(g) => {
                        if node != 0 {
                            return Err(SimError::NodeOutOfRange { node, count: 1 });
                        }
                        multiserver_metrics(path, services(0)?, g.servers, horizon)?
                    }
                    _ => node_metrics(path, node, services(node)?, horizon)?,
                };
                Ok(match measure {
                    NodeMeasure::S => m.s,
                    NodeMeasure::W => m.w,
                    NodeMeasure::T => m.t,
                    NodeMeasure::U => m.u,
                    NodeMeasure::J => m.j,
                    NodeMeasure::Q => m.q,
                    NodeMeasure::UPerServer => m.u_per_server.unwrap_or(m.u),
                })
            }
            Measure::System(which) => {
                if !matches!(model, ModelSpec::Gg1 | ModelSpec::Tandem(_)) {
                    return Err(unsupported("system measures need an open tandem or G/G/1"));
                }
                let m = system_metrics(path, &inputs.services, path.horizon)?;
                Ok(match which {
                    SystemMeasure::S => m.s,
                    SystemMeasure::W => m.w,
                })
            }
            Measure::Idle { node } => {
                if !matches!(model, ModelSpec::Gg1 | ModelSpec::Tandem(_)) {
                    return Err(unsupported("idle time needs an open tandem or G/G/1"));
                }
                idle_time(path, node, services(node)?, path.horizon)
            }
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Node { measure, node } => {
                let name = match measure {
                    NodeMeasure::S => "S",
                    NodeMeasure::W => "W",
                    NodeMeasure::T => "T",
                    NodeMeasure::U => "U",
                    NodeMeasure::J => "J",
                    NodeMeasure::Q => "Q",
                    NodeMeasure::UPerServer => "Um",
                };
                write!(f, "{name}[{node}]")
            }
            Measure::System(SystemMeasure::S) => f.write_str("system.S"),
            Measure::System(SystemMeasure::W) => f.write_str("system.W"),
            Measure::Idle { node } => write!(f, "I[{node}]"),
        }
    }
}

impl FromStr for Measure {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || SimError::InvalidParameter(format!("unknown measure {s:?}"));
        match s.trim() {
            "system.S" => return Ok(Measure::System(SystemMeasure::S)),
            "system.W" => return Ok(Measure::System(SystemMeasure::W)),
            _ => {}
        }
        let (name, rest) = s.trim().split_once('[').ok_or_else(bad)?;
        let node: usize = rest
            .strip_suffix(']')
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        let measure = match name {
            "S" => NodeMeasure::S,
            "W" => NodeMeasure::W,
            "T" => NodeMeasure::T,
            "U" => NodeMeasure::U,
            "J" => NodeMeasure::J,
            "Q" => NodeMeasure::Q,
            "Um" => NodeMeasure::UPerServer,
            "I" => return Ok(Measure::Idle { node }),
            _ => return Err(bad()),
        };
        Ok(Measure::Node { measure, node })
    }
}

impl TryFrom<String> for Measure {
    type Error = SimError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Measure> for String {
    fn from(m: Measure) -> String {
        m.to_string()
    }
}
