//! Configuration-driven runner behind the `recursim` binary.

pub mod config;
mod report;

use std::path::PathBuf;

use clap::Parser;

use recursim::validate::{compare, corpus, Agreement, Instance, InstanceKind};
use recursim::{
    estimate_antithetic, estimate_crn_difference, estimate_finite_horizon,
    estimate_independent_difference, estimate_steady_state, fd_gradient, ipa_gradient, simulate,
    Estimate, ModelSpec, MonteCarlo, SimError, SteadyStateConfig,
};

use config::{ExperimentConfig, Manifest, Method, Mode};
use report::{Report, SummaryRow};

/// Largest departure-epoch difference tolerated between engine and oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("simulation error: {0}")]
    Simulation(#[from] SimError),
    #[error("oracle mismatch: {0}")]
    Mismatch(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub(crate) fn config(e: SimError) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Simulation(_) | CliError::Io(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }
}

/// Queueing simulation by arrival/departure recursions.
#[derive(Debug, Parser)]
#[command(name = "recursim", version)]
pub struct Args {
    /// TOML experiment file, or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shorthand for `--mode validate`; without `--config` the built-in corpus is checked.
    #[arg(long)]
    pub validate: bool,
    #[arg(long)]
    pub quiet: bool,
    /// Worker threads for replications.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Args {
    fn mode(&self) -> Option<Mode> {
        if self.validate {
            Some(Mode::Validate)
        } else {
            self.mode
        }
    }
}

/// Runs the command described by `args`; returns the files written.
pub fn run(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let Some(path) = &args.config else {
        return match args.mode() {
            Some(Mode::Validate) => {
                let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
                run_corpus(args.seed.unwrap_or(0), out, args.quiet)
            }
            _ => Err(CliError::Config(
                "--config is required outside validate mode".into(),
            )),
        };
    };
    let mut config = config::load(path)?;
    if let Some(m) = args.mode() {
        config.mode = m;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(o) = &args.out {
        config.out = o.clone();
    }
    if args.threads.is_some() {
        config.threads = args.threads;
    }
    config.validate()?;
    execute(&config, args.quiet)
}

pub fn execute(config: &ExperimentConfig, quiet: bool) -> Result<Vec<PathBuf>, CliError> {
    let mut report = Report::new(&config.out)?;
    match config.mode {
        Mode::Path => path_mode(config, &mut report)?,
        Mode::Estimate => estimate_mode(config, &mut report)?,
        Mode::Steady => steady_mode(config, &mut report)?,
        Mode::Ipa => ipa_mode(config, &mut report)?,
        Mode::Validate => {
            let cases = config_cases(config)?;
            validate_cases(&cases, &mut report, quiet)?;
        }
    }
    report.json("manifest.json", &Manifest::new(config))?;
    if !quiet {
        report.print_summary();
    }
    Ok(report.written)
}

fn monte_carlo(config: &ExperimentConfig) -> MonteCarlo {
    let mc = MonteCarlo::new(config.seed);
    match config.threads {
        Some(n) => mc.with_threads(n),
        None => mc,
    }
}

fn path_mode(config: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let inputs = match (config.fixed_inputs(), config.stochastic()) {
        (Some(i), _) => i,
        (None, Some(sm)) => {
            sm.sample_inputs(&config.theta, config.horizon, config.seed, 0, false)?
        }
        (None, None) => unreachable!("checked by validate"),
    };
    let path = simulate(&config.model, &inputs, config.horizon)?;
    let mut rows = Vec::new();
    for (n, (a, d)) in path.arrivals.iter().zip(&path.departures).enumerate() {
        for k in 0..d.len() {
            let c = path
                .completions
                .as_ref()
                .map(|c| report::num(c[k]))
                .unwrap_or_default();
            rows.push(vec![
                n.to_string(),
                (k + 1).to_string(),
                report::num(a[k]),
                report::num(d[k]),
                c,
            ]);
        }
    }
    report.csv("path.csv", &["node", "k", "A", "D", "C"], rows)?;
    let metrics = config
        .measures()
        .iter()
        .map(|m| {
            Ok(vec![
                m.to_string(),
                report::num(m.evaluate(&config.model, &path, &inputs)?),
            ])
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    report.csv("metrics.csv", &["measure", "value"], metrics)
}

fn estimates_out(report: &mut Report, rows: Vec<SummaryRow>) -> Result<(), CliError> {
    let mut header = vec!["measure", "mean", "variance", "ci95_low", "ci95_high", "R"];
    let extra: Vec<&'static str> = rows.first().map(|r| r.extra_columns()).unwrap_or_default();
    header.extend(&extra);
    let table = rows.iter().map(|r| r.csv_row()).collect();
    report.csv("estimates.csv", &header, table)?;
    report.json("summary.json", &rows)?;
    report.summary = rows;
    Ok(())
}

fn estimate_mode(config: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let sm = config.stochastic().expect("checked by validate");
    let (measures, theta, k, r) = (
        config.measures(),
        &config.theta,
        config.horizon,
        config.replications,
    );
    let mc = monte_carlo(config);
    let alt = &config.estimate.theta_alt;
    let estimates: Vec<Estimate> = match config.estimate.method {
        Method::Crude => estimate_finite_horizon(&sm, &measures, theta, k, r, &mc)?,
        Method::Antithetic => estimate_antithetic(&sm, &measures, theta, k, r, &mc)?,
        Method::Crn => estimate_crn_difference(&sm, &measures, theta, alt, k, r, &mc)?,
        Method::Independent => {
            estimate_independent_difference(&sm, &measures, theta, alt, k, r, &mc)?
        }
    };
    let method = match config.estimate.method {
        Method::Crude => "crude",
        Method::Antithetic => "antithetic",
        Method::Crn => "crn",
        Method::Independent => "independent",
    };
    let rows = measures
        .iter()
        .zip(&estimates)
        .map(|(m, e)| SummaryRow::new(m.to_string(), e, config.seed).with_method(method))
        .collect();
    estimates_out(report, rows)
}

fn steady_mode(config: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let sm = config.stochastic().expect("checked by validate");
    let measures = config.measures();
    let mut steady = SteadyStateConfig::new(config.horizon);
    steady.warmup = config.steady.warmup;
    if let Some(b) = config.steady.batches {
        steady.batches = b;
    }
    let results =
        estimate_steady_state(&sm, &measures, &config.theta, &steady, &monte_carlo(config))?;
    let rows = measures
        .iter()
        .zip(&results)
        .map(|(m, s)| {
            SummaryRow::new(m.to_string(), &s.estimate, config.seed).with_trend(s.trend, s.unstable)
        })
        .collect();
    estimates_out(report, rows)
}

fn ipa_mode(config: &ExperimentConfig, report: &mut Report) -> Result<(), CliError> {
    let sm = config.stochastic().expect("checked by validate");
    let (measures, theta, k, r) = (
        config.measures(),
        &config.theta,
        config.horizon,
        config.replications,
    );
    let coord = config.ipa.coordinate;
    let mc = monte_carlo(config);
    let ipa = ipa_gradient(&sm, &measures, theta, coord, k, r, &mc)?;
    let mut rows: Vec<SummaryRow> = measures
        .iter()
        .zip(&ipa)
        .map(|(m, g)| {
            SummaryRow::new(format!("d{m}/dθ{coord}"), &g.estimate, config.seed)
                .with_estimator("ipa", Some(g.ties))
        })
        .collect();
    if let Some(h) = config.ipa.fd_step {
        let fd = fd_gradient(&sm, &measures, theta, coord, h, k, r, &mc)?;
        rows.extend(measures.iter().zip(&fd).map(|(m, e)| {
            SummaryRow::new(format!("d{m}/dθ{coord}"), e, config.seed).with_estimator("fd", None)
        }));
    }
    estimates_out(report, rows)
}

/// Instances named by a config: its fixed inputs, or `replications` sampled ones.
fn config_cases(config: &ExperimentConfig) -> Result<Vec<(String, Instance)>, CliError> {
    let kind = match &config.model {
        ModelSpec::Gg1 => InstanceKind::Gg1,
        ModelSpec::Tandem(_) => InstanceKind::Tandem,
        ModelSpec::ClosedTandem(_) => InstanceKind::ClosedTandem,
        ModelSpec::Ggm(_) => InstanceKind::Ggm,
        ModelSpec::Network(_) => InstanceKind::Network,
    };
    let make = |inputs| Instance {
        kind,
        model: config.model.clone(),
        inputs,
        horizon: config.horizon,
    };
    if let Some(inputs) = config.fixed_inputs() {
        return Ok(vec![("inputs".into(), make(inputs))]);
    }
    let sm = config
        .stochastic()
        .ok_or_else(|| CliError::Config("validate mode needs [inputs] or input laws".into()))?;
    (0..config.replications as u64)
        .map(|r| {
            let inputs = sm.sample_inputs(&config.theta, config.horizon, config.seed, r, false)?;
            Ok((format!("replication-{r}"), make(inputs)))
        })
        .collect()
}

fn run_corpus(seed: u64, out: PathBuf, quiet: bool) -> Result<Vec<PathBuf>, CliError> {
    let mut report = Report::new(&out)?;
    let cases: Vec<(String, Instance)> = corpus(30, 200, seed)?
        .into_iter()
        .enumerate()
        .map(|(i, inst)| (format!("{}-{i}", inst.kind.label()), inst))
        .collect();
    validate_cases(&cases, &mut report, quiet)?;
    report.json(
        "manifest.json",
        &serde_json::json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "mode": "validate",
            "corpus": { "per_kind": 30, "max_horizon": 200 },
        }),
    )?;
    Ok(report.written)
}

fn validate_cases(
    cases: &[(String, Instance)],
    report: &mut Report,
    quiet: bool,
) -> Result<(), CliError> {
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (name, inst) in cases {
        let a: Agreement = compare(inst);
        let ok = a.within(ORACLE_TOLERANCE);
        let status = match (&a.engine_error, ok) {
            (Some(e), true) => format!("both-error: {e}"),
            (_, true) => "ok".to_string(),
            (_, false) => "mismatch".to_string(),
        };
        if !ok {
            failed.push(name.clone());
        }
        rows.push(vec![
            name.clone(),
            inst.kind.label().to_string(),
            inst.horizon.to_string(),
            a.gap.map(report::num).unwrap_or_default(),
            a.residual.map(report::num).unwrap_or_default(),
            status,
        ]);
    }
    report.csv(
        "validation.csv",
        &["case", "kind", "horizon", "max_gap", "residual", "status"],
        rows,
    )?;
    if !quiet {
        println!(
            "validated {} cases, {} mismatched",
            cases.len(),
            failed.len()
        );
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!(
            "{} of {} cases: {}",
            failed.len(),
            cases.len(),
            failed.join(", ")
        )))
    }
}
