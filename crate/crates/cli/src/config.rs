//! Experiment description read from a TOML file (or from the `config` field
//! of a manifest written by an earlier run).

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use recursim::{DistributionSpec, Measure, ModelInputs, ModelSpec, NodeMeasure, StochasticModel};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Path,
    Estimate,
    Steady,
    Ipa,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Crude,
    Antithetic,
    /// `F(θ) − F(θ_alt)` on common streams.
    Crn,
    /// `F(θ) − F(θ_alt)` on independent streams.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta_alt: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpaSection {
    #[serde(default)]
    pub coordinate: usize,
    /// Also report a central finite difference with this step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
}

/// Fixed input sequences for path and validate modes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    #[serde(default)]
    pub interarrivals: Vec<f64>,
    pub services: Vec<Vec<f64>>,
}

fn default_replications() -> usize {
    100
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    pub horizon: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub theta: Vec<f64>,
    /// Defaults to `S` and `W` of every node.
    #[serde(default)]
    pub measures: Vec<Measure>,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival: Option<DistributionSpec>,
    #[serde(default, rename = "service", skip_serializing_if = "Vec::is_empty")]
    pub services: Vec<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<InputSection>,
    #[serde(default)]
    pub estimate: EstimateSection,
    #[serde(default)]
    pub steady: SteadySection,
    #[serde(default)]
    pub ipa: IpaSection,
    /// Output directory; not part of the manifest.
    #[serde(default = "default_out", skip_serializing)]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it, so it is not recorded.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub mode: Mode,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            mode: config.mode,
            config: config.clone(),
        }
    }
}

/// Reads a TOML config, or the config embedded in a `.json` manifest.
pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(m.config)
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

impl ExperimentConfig {
    pub fn stochastic(&self) -> Option<StochasticModel> {
        if self.services.is_empty() {
            return None;
        }
        Some(StochasticModel {
            model: self.model.clone(),
            interarrival: self.arrival.clone(),
            services: self.services.clone(),
        })
    }

    pub fn fixed_inputs(&self) -> Option<ModelInputs> {
        self.inputs
            .as_ref()
            .map(|i| ModelInputs::new(i.interarrivals.clone(), i.services.clone()))
    }

    pub fn measures(&self) -> Vec<Measure> {
        if self.measures.is_empty() {
            (0..self.model.node_count())
                .flat_map(|n| {
                    [
                        Measure::node(NodeMeasure::S, n),
                        Measure::node(NodeMeasure::W, n),
                    ]
                })
                .collect()
        } else {
            self.measures.clone()
        }
    }

    /// Checks that everything the selected mode needs is present and valid.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        self.model.validate().map_err(CliError::config)?;
        let nodes = self.model.node_count();
        for m in &self.measures {
            if let Some(n) = m.node_index() {
                if n >= nodes {
                    return bad(format!(
                        "measure {m} refers to node {n}; the model has {nodes}"
                    ));
                }
            }
        }
        if let Some(inputs) = &self.inputs {
            if inputs.services.len() != nodes {
                return bad(format!(
                    "inputs give {} service sequences for {nodes} nodes",
                    inputs.services.len()
                ));
            }
        }
        let laws = self.stochastic();
        if let Some(sm) = &laws {
            sm.validate(&self.theta).map_err(CliError::config)?;
        }
        let needs_laws = matches!(self.mode, Mode::Estimate | Mode::Steady | Mode::Ipa);
        if needs_laws && laws.is_none() {
            return bad(format!(
                "{:?} mode needs [arrival] and [[service]] laws",
                self.mode
            ));
        }
        if self.mode == Mode::Path && laws.is_none() && self.inputs.is_none() {
            return bad("path mode needs [inputs] or input laws".into());
        }
        if matches!(self.mode, Mode::Estimate | Mode::Ipa) && self.replications < 2 {
            return bad("at least two replications are needed for an interval".into());
        }
        if self.mode == Mode::Estimate
            && matches!(self.estimate.method, Method::Crn | Method::Independent)
        {
            if self.estimate.theta_alt.len() != self.theta.len() {
                return bad("theta_alt must have the same length as theta".into());
            }
            if let Some(sm) = &laws {
                sm.validate(&self.estimate.theta_alt)
                    .map_err(CliError::config)?;
            }
        }
        if self.mode == Mode::Ipa && self.ipa.coordinate >= self.theta.len() {
            return bad(format!(
                "ipa coordinate {} outside theta of length {}",
                self.ipa.coordinate,
                self.theta.len()
            ));
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        Ok(())
    }
}
