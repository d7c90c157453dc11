//! Replicated estimation over randomly sampled inputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distribution::DistributionSpec;
use super::estimate::{compensated_sum, Estimate};
use super::stream::{service_slot, stream_id, RandomStream, INTERARRIVAL_SLOT};
use crate::algebra::TangentEpoch;
use crate::error::{Result, SimError};
use crate::metrics::{window_metrics, Measure, NodeMeasure, SystemMeasure};
use crate::model::{simulate, ModelInputs, ModelSpec};
use crate::types::SamplePath;

/// A model together with the laws of its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticModel {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interarrival: Option<DistributionSpec>,
    pub services: Vec<DistributionSpec>,
}

impl StochasticModel {
    pub fn validate(&self, theta: &[f64]) -> Result<()> {
        self.model.validate()?;
        match (&self.interarrival, self.model.has_external_arrivals()) {
            (Some(d), true) => d.validate(theta)?,
            (None, false) => {}
            (None, true) => {
                return Err(SimError::InvalidSpec(
                    "open model needs an interarrival law".into(),
                ))
            }
            (Some(_), false) => {
                return Err(SimError::InvalidSpec(
                    "closed model takes no interarrival law".into(),
                ))
            }
        }
        if self.services.len() != self.model.node_count() {
            return Err(SimError::InvalidSpec(format!(
                "model has {} nodes but {} service laws",
                self.model.node_count(),
                self.services.len()
            )));
        }
        self.services.iter().try_for_each(|s| s.validate(theta))
    }

    fn streams(
        &self,
        seed: u64,
        replication: u64,
        antithetic: bool,
    ) -> impl Fn(u64) -> RandomStream {
        move |slot| {
            let s = RandomStream::new(seed, stream_id(replication, slot));
            if antithetic {
                s.antithetic()
            } else {
                s
            }
        }
    }

    /// Inputs of replication `replication` at parameter `theta`.
    pub fn sample_inputs(
        &self,
        theta: &[f64],
        horizon: usize,
        seed: u64,
        replication: u64,
        antithetic: bool,
    ) -> Result<ModelInputs> {
        self.validate(theta)?;
        let stream = self.streams(seed, replication, antithetic);
        let interarrivals = match &self.interarrival {
            Some(d) => d.sample(theta, horizon, &mut stream(INTERARRIVAL_SLOT))?,
            None => Vec::new(),
        };
        let services = self
            .services
            .iter()
            .zip(self.model.node_horizons(horizon))
            .enumerate()
            .map(|(n, (d, h))| d.sample(theta, h, &mut stream(service_slot(n))))
            .collect::<Result<_>>()?;
        Ok(ModelInputs::new(interarrivals, services))
    }

    /// Same draws as [`Self::sample_inputs`], carrying derivatives in `θ_coord`.
    pub fn sample_tangent_inputs(
        &self,
        theta: &[f64],
        coord: usize,
        horizon: usize,
        seed: u64,
        replication: u64,
    ) -> Result<ModelInputs<TangentEpoch>> {
        self.validate(theta)?;
        if coord >= theta.len() {
            return Err(SimError::InvalidParameter(format!(
                "coordinate {coord} outside θ of length {}",
                theta.len()
            )));
        }
        let stream = self.streams(seed, replication, false);
        let interarrivals = match &self.interarrival {
            Some(d) => d.sample_tangents(theta, coord, horizon, &mut stream(INTERARRIVAL_SLOT))?,
            None => Vec::new(),
        };
        let services = self
            .services
            .iter()
            .zip(self.model.node_horizons(horizon))
            .enumerate()
            .map(|(n, (d, h))| d.sample_tangents(theta, coord, h, &mut stream(service_slot(n))))
            .collect::<Result<_>>()?;
        Ok(ModelInputs::new(interarrivals, services))
    }

    fn check_pairing(&self) -> Result<()> {
        let laws = self.interarrival.iter().chain(&self.services);
        match laws.map(|d| &d.family).find(|f| !f.is_monotone()) {
            Some(f) => Err(SimError::UnsupportedPairing(format!(
                "{f:?} is not sampled by inversion"
            ))),
            None => Ok(()),
        }
    }
}

/// Replication driver. Results do not depend on `threads`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MonteCarlo {
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl MonteCarlo {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            threads: None,
        }
    }

    pub fn with_threads(self, threads: usize) -> Self {
        Self {
            threads: Some(threads),
            ..self
        }
    }

    /// Runs `job` for replications `0..count` and returns one row per
    /// replication, in replication order.
    pub fn replicate<F>(&self, count: usize, job: F) -> Result<Vec<Vec<f64>>>
    where
        F: Fn(u64) -> Result<Vec<f64>> + Sync + Send,
    {
        let run =
            || -> Vec<Result<Vec<f64>>> { (0..count as u64).into_par_iter().map(&job).collect() };
        let rows = match self.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SimError::InvalidParameter(format!("thread pool: {e}")))?
                .install(run),
            None => run(),
        };
        rows.into_iter()
            .enumerate()
            .map(|(index, r)| {
                r.map_err(|e| SimError::Replication {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

/// Column-wise estimates of replication rows.
pub fn summarize(rows: &[Vec<f64>], columns: usize) -> Result<Vec<Estimate>> {
    (0..columns)
        .map(|c| Estimate::from_samples(&rows.iter().map(|r| r[c]).collect::<Vec<_>>()))
        .collect()
}

fn evaluate_all(
    model: &ModelSpec,
    measures: &[Measure],
    path: &SamplePath,
    inputs: &ModelInputs,
) -> Result<Vec<f64>> {
    measures
        .iter()
        .map(|m| m.evaluate(model, path, inputs))
        .collect()
}

fn observe(
    sm: &StochasticModel,
    measures: &[Measure],
    theta: &[f64],
    horizon: usize,
    seed: u64,
    replication: u64,
    antithetic: bool,
) -> Result<Vec<f64>> {
    let inputs = sm.sample_inputs(theta, horizon, seed, replication, antithetic)?;
    let path = simulate(&sm.model, &inputs, horizon)?;
    evaluate_all(&sm.model, measures, &path, &inputs)
}

fn check_measures(measures: &[Measure]) -> Result<()> {
    if measures.is_empty() {
        return Err(SimError::InvalidParameter("no measures requested".into()));
    }
    Ok(())
}

/// Crude estimates over `replications` independent replications.
pub fn estimate_finite_horizon(
    sm: &StochasticModel,
    measures: &[Measure],
    theta: &[f64],
    horizon: usize,
    replications: usize,
    mc: &MonteCarlo,
) -> Result<Vec<Estimate>> {
    check_measures(measures)?;
    sm.validate(theta)?;
    let rows = mc.replicate(replications, |r| {
        observe(sm, measures, theta, horizon, mc.seed, r, false)
    })?;
    summarize(&rows, measures.len())
}

/// Estimates from `pairs` antithetic pairs; each observation is the pair average.
pub fn estimate_antithetic(
    sm: &StochasticModel,
    measures: &[Measure],
    theta: &[f64],
    horizon: usize,
    pairs: usize,
    mc: &MonteCarlo,
) -> Result<Vec<Estimate>> {
    check_measures(measures)?;
    sm.validate(theta)?;
    sm.check_pairing()?;
    let rows = mc.replicate(pairs, |r| {
        let plain = observe(sm, measures, theta, horizon, mc.seed, r, false)?;
        let mirror = observe(sm, measures, theta, horizon, mc.seed, r, true)?;
        Ok(plain
            .iter()
            .zip(&mirror)
            .map(|(a, b)| 0.5 * (a + b))
            .collect())
    })?;
    summarize(&rows, measures.len())
}

/// `F(θa) − F(θb)` with both terms driven by the same streams.
pub fn estimate_crn_difference(
    sm: &StochasticModel,
    measures: &[Measure],
    theta_a: &[f64],
    theta_b: &[f64],
    horizon: usize,
    replications: usize,
    mc: &MonteCarlo,
) -> Result<Vec<Estimate>> {
    difference(sm, measures, theta_a, theta_b, horizon, replications, mc, 0)
}

/// `F(θa) − F(θb)` with the second term on replications disjoint from the first.
pub fn estimate_independent_difference(
    sm: &StochasticModel,
    measures: &[Measure],
    theta_a: &[f64],
    theta_b: &[f64],
    horizon: usize,
    replications: usize,
    mc: &MonteCarlo,
) -> Result<Vec<Estimate>> {
    difference(
        sm,
        measures,
        theta_a,
        theta_b,
        horizon,
        replications,
        mc,
        replications as u64,
    )
}

#[allow(clippy::too_many_arguments)]
fn difference(
    sm: &StochasticModel,
    measures: &[Measure],
    theta_a: &[f64],
    theta_b: &[f64],
    horizon: usize,
    replications: usize,
    mc: &MonteCarlo,
    offset: u64,
) -> Result<Vec<Estimate>> {
    check_measures(measures)?;
    sm.validate(theta_a)?;
    sm.validate(theta_b)?;
    let rows = mc.replicate(replications, |r| {
        let a = observe(sm, measures, theta_a, horizon, mc.seed, r, false)?;
        let b = observe(sm, measures, theta_b, horizon, mc.seed, r + offset, false)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect())
    })?;
    summarize(&rows, measures.len())
}

/// Batch-means settings; `warmup` defaults to `horizon / 100`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SteadyStateConfig {
    pub horizon: usize,
    #[serde(default)]
    pub warmup: Option<usize>,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_batches() -> usize {
    32
}

impl SteadyStateConfig {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            warmup: None,
            batches: default_batches(),
        }
    }

    pub fn warmup(&self) -> usize {
        self.warmup.unwrap_or(self.horizon / 100)
    }
}

/// Batch means of one long run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyEstimate {
    /// Estimate over the batch means; `replications` is the batch count.
    pub estimate: Estimate,
    /// Kendall rank correlation of the batch means with their order.
    pub trend: f64,
    /// Batch means move (nearly) monotonically, so no steady state is evident.
    pub unstable: bool,
}

/// Rank correlation at or above which batch means count as trending.
pub const TREND_LIMIT: f64 = 0.8;

pub fn kendall_tau(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut score = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            score += match values[j].partial_cmp(&values[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    score as f64 / (n * (n - 1) / 2) as f64
}

fn batch_value(
    model: &ModelSpec,
    measure: &Measure,
    path: &SamplePath,
    inputs: &ModelInputs,
    lo: usize,
    hi: usize,
) -> Result<f64> {
    match *measure {
        Measure::Node {
            measure: which,
            node,
        } => {
            let servers = match model {
                ModelSpec::Ggm(g) => Some(g.servers),
                _ => None,
            };
            let services = inputs
                .services
                .get(node)
                .ok_or(SimError::MissingNode(node))?;
            let m = window_metrics(path, node, services, servers, lo, hi)?;
            Ok(match which {
                NodeMeasure::S => m.s,
                NodeMeasure::W => m.w,
                NodeMeasure::T => m.t,
                NodeMeasure::U => m.u,
                NodeMeasure::J => m.j,
                NodeMeasure::Q => m.q,
                NodeMeasure::UPerServer => m.u_per_server.unwrap_or(m.u),
            })
        }
        Measure::System(which) if matches!(model, ModelSpec::Gg1 | ModelSpec::Tandem(_)) => {
            let last = path.node_count() - 1;
            let (a, d) = (&path.arrivals[0], &path.departures[last]);
            let per = (lo..hi).map(|k| {
                let s = d[k] - a[k];
                match which {
                    SystemMeasure::S => s,
                    SystemMeasure::W => {
                        (s - inputs.services.iter().map(|t| t[k]).sum::<f64>()).max(0.0)
                    }
                }
            });
            Ok(compensated_sum(per) / (hi - lo) as f64)
        }
        _ => Err(SimError::UnsupportedMeasure {
            measure: measure.to_string(),
            reason: "no batch form".into(),
        }),
    }
}

fn customers(measure: &Measure, path: &SamplePath) -> usize {
    match measure.node_index() {
        Some(n) => path.departures.get(n).map_or(0, Vec::len),
        None => path.horizon,
    }
}

/// Long-run averages by batch means over one run of replication 0.
pub fn estimate_steady_state(
    sm: &StochasticModel,
    measures: &[Measure],
    theta: &[f64],
    config: &SteadyStateConfig,
    mc: &MonteCarlo,
) -> Result<Vec<SteadyEstimate>> {
    check_measures(measures)?;
    if config.batches < 2 {
        return Err(SimError::InvalidParameter(
            "batch means need at least two batches".into(),
        ));
    }
    let inputs = sm.sample_inputs(theta, config.horizon, mc.seed, 0, false)?;
    let path = simulate(&sm.model, &inputs, config.horizon)?;
    let warmup = config.warmup();
    measures
        .iter()
        .map(|m| {
            let total = customers(m, &path);
            let size = total.saturating_sub(warmup) / config.batches;
            if size == 0 {
                return Err(SimError::InsufficientElements {
                    needed: warmup + config.batches,
                    got: total,
                });
            }
            let means = (0..config.batches)
                .map(|b| {
                    let lo = warmup + b * size;
                    batch_value(&sm.model, m, &path, &inputs, lo, lo + size)
                })
                .collect::<Result<Vec<_>>>()?;
            let trend = kendall_tau(&means);
            Ok(SteadyEstimate {
                estimate: Estimate::from_samples(&means)?,
                trend,
                unstable: trend.abs() >= TREND_LIMIT,
            })
        })
        .collect()
}
