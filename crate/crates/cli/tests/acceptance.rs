//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use recursim::validate::{
    compare, corpus, random_instance, random_instance_with, Grid, InstanceKind,
};
use recursim::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn all_epochs(p: &SamplePath) -> Vec<f64> {
    let mut v = p.departures.concat();
    if let Some(c) = &p.completions {
        v.extend(c);
    }
    v
}

fn sequences(inputs: &ModelInputs) -> (DurationSequence, Vec<DurationSequence>) {
    (
        DurationSequence::interarrivals(inputs.interarrivals.clone()).unwrap(),
        inputs
            .services
            .iter()
            .map(|s| DurationSequence::services(s.clone()).unwrap())
            .collect(),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let instances = corpus(35, 1000, 2024).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for inst in &instances {
        let a = compare(inst);
        if !a.within(1e-9) || a.engine_error.is_some() {
            bad.push(format!("{:?}", inst.kind));
        }
        worst = worst.max(a.gap.unwrap_or(f64::INFINITY));
    }
    let elapsed = start.elapsed();
    let longest = instances.iter().map(|i| i.horizon).max().unwrap_or(0);
    check(
        bad.is_empty() && instances.len() >= 200 && elapsed <= Duration::from_secs(120),
        format!(
            "{} instances (K up to {longest}), max gap {worst:e}, {} mismatches, {:.1}s",
            instances.len(),
            bad.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn subset_formulas() -> Outcome {
    let mut checked = 0usize;
    for servers in 1..=4 {
        for seed in 0..100u64 {
            let mut stream = RandomStream::new(seed, servers as u64);
            let mut draw = |grid: bool| -> Vec<f64> {
                (0..10)
                    .map(|_| {
                        let u = stream.next_uniform() * 3.0;
                        if grid {
                            u.floor()
                        } else {
                            u
                        }
                    })
                    .collect()
            };
            let grid = seed % 2 == 0;
            let (alpha, tau) = (draw(grid), draw(grid));
            let p = simulate_ggm(
                &GGmSpec::new(servers),
                &DurationSequence::interarrivals(alpha).unwrap(),
                &DurationSequence::services(tau).unwrap(),
                10,
            )
            .map_err(|e| e.to_string())?;
            let c = p.completions.as_ref().unwrap();
            for k in 1..=10 {
                let brute = departure_bruteforce(c, servers, k).map_err(|e| e.to_string())?;
                if brute != p.departures[0][k - 1] {
                    return Err(format!(
                        "m={servers} seed={seed} k={k}: {brute} vs {}",
                        p.departures[0][k - 1]
                    ));
                }
                checked += 1;
            }
        }
    }
    let mut order_stats = 0usize;
    for seed in 0..100u64 {
        let inst = random_instance_with(InstanceKind::Network, seed, 6, Grid::Mixed)
            .map_err(|e| e.to_string())?;
        let ModelSpec::Network(spec) = &inst.model else {
            unreachable!()
        };
        let path = simulate(&inst.model, &inst.inputs, inst.horizon).map_err(|e| e.to_string())?;
        let sets = routed_departures(spec, &path).map_err(|e| e.to_string())?;
        for (n, arrivals) in path.arrivals.iter().enumerate() {
            let Capacity::Finite(pop) = spec.populations[n] else {
                continue;
            };
            for (k, &a) in arrivals.iter().enumerate().skip(pop) {
                let brute =
                    arrival_epoch_bruteforce(&sets[n], k - pop + 1).map_err(|e| e.to_string())?;
                if brute != a {
                    return Err(format!(
                        "network seed={seed} node {n} k={}: {brute} vs {a}",
                        k + 1
                    ));
                }
                order_stats += 1;
            }
        }
    }
    Ok(format!(
        "{checked} G/G/m departures (m <= 4, k <= 10) and {order_stats} network arrival epochs equal enumeration"
    ))
}

fn reductions() -> Outcome {
    for seed in 0..50u64 {
        let inst = random_instance(InstanceKind::Gg1, seed).map_err(|e| e.to_string())?;
        let (a, s) = sequences(&inst.inputs);
        let single = simulate_gg1(&a, &s[0], inst.horizon).map_err(|e| e.to_string())?;
        let multi =
            simulate_ggm(&GGmSpec::new(1), &a, &s[0], inst.horizon).map_err(|e| e.to_string())?;
        if single.departures != multi.departures {
            return Err(format!("m=1 differs from G/G/1 at seed {seed}"));
        }
    }
    for seed in 0..50u64 {
        let inst = random_instance(InstanceKind::Tandem, seed).map_err(|e| e.to_string())?;
        let (a, s) = sequences(&inst.inputs);
        let n = s.len();
        let plain = simulate_open_tandem(&TandemSpec::unbounded(n), &a, &s, inst.horizon)
            .map_err(|e| e.to_string())?;
        for blocking in [Blocking::Manufacturing, Blocking::Communication] {
            let spec = TandemSpec::with_buffers(vec![Capacity::Unbounded; n - 1], blocking);
            let p = simulate_open_tandem(&spec, &a, &s, inst.horizon).map_err(|e| e.to_string())?;
            if p.departures != plain.departures {
                return Err(format!("unbounded {blocking:?} differs at seed {seed}"));
            }
        }
    }
    for seed in 0..50u64 {
        let inst = random_instance(InstanceKind::Tandem, seed + 500).map_err(|e| e.to_string())?;
        let (a, s) = sequences(&inst.inputs);
        let spec = TandemSpec::unbounded(s.len());
        let plain = simulate_open_tandem(&spec, &a, &s, inst.horizon).map_err(|e| e.to_string())?;
        let enc = tandem_as_network(&spec, &a, &s, inst.horizon).map_err(|e| e.to_string())?;
        let net =
            simulate_network(&enc.spec, &enc.services, &enc.horizons).map_err(|e| e.to_string())?;
        if enc.tandem_departures(&net) != &plain.departures[..] {
            return Err(format!("network encoding differs at seed {seed}"));
        }
    }
    Ok(
        "m=1 G/G/m, unbounded blocking variants and network encoding each equal on 50 instances"
            .into(),
    )
}

fn metric_identities() -> Outcome {
    let instances = corpus(35, 1000, 99).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for inst in &instances {
        let path = simulate(&inst.model, &inst.inputs, inst.horizon).map_err(|e| e.to_string())?;
        for node in 0..inst.model.node_count() {
            let tau = &inst.inputs.services[node];
            let k = path.departures[node].len();
            if k == 0 || path.departures[node][k - 1] == 0.0 {
                continue;
            }
            let m = match &inst.model {
                ModelSpec::Ggm(g) => multiserver_metrics(&path, tau, g.servers, k),
                _ => node_metrics(&path, node, tau, k),
            }
            .map_err(|e| e.to_string())?;
            let rel = |a: f64, b: f64| {
                let scale = a.abs().max(b.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / scale
                }
            };
            let mean_tau = tau[..k].iter().sum::<f64>() / k as f64;
            worst = worst
                .max(rel(m.j, m.t * m.s))
                .max(rel(m.q, m.t * m.w))
                .max(rel(m.u, m.t * mean_tau));
            checked += 1;
        }
    }
    check(
        worst <= 1e-12,
        format!("{checked} node paths, largest relative deviation {worst:e}"),
    )
}

fn analytic_steady_state() -> Outcome {
    let case = |sm: StochasticModel, seed: u64| {
        let start = Instant::now();
        let config = SteadyStateConfig {
            horizon: 1_000_000,
            warmup: Some(10_000),
            batches: 32,
        };
        let measures: Vec<Measure> = vec!["W[0]".parse().unwrap(), "S[0]".parse().unwrap()];
        let out = estimate_steady_state(&sm, &measures, &[], &config, &MonteCarlo::new(seed))
            .map_err(|e| e.to_string())?;
        Ok::<_, String>((out[0].estimate.mean, out[1].estimate.mean, start.elapsed()))
    };
    let mm1 = StochasticModel {
        model: ModelSpec::Gg1,
        interarrival: Some(DistributionSpec::exponential(0.5)),
        services: vec![DistributionSpec::exponential(1.0)],
    };
    let mm2 = StochasticModel {
        model: ModelSpec::Ggm(GGmSpec::new(2)),
        interarrival: Some(DistributionSpec::exponential(1.0)),
        services: vec![DistributionSpec::exponential(1.0)],
    };
    let (w1, s1, t1) = case(mm1, 1)?;
    let (w2, _, t2) = case(mm2, 2)?;
    // Erlang C with offered load a = 1 on two servers
    let (a, m) = (1.0f64, 2.0f64);
    let tail = a * a / 2.0 / (1.0 - a / m);
    let p_wait = tail / (1.0 + a + tail);
    let wq = p_wait / (m * 1.0 - 1.0);
    let within = |x: f64, target: f64| (x - target).abs() <= 0.05 * target;
    let limit = Duration::from_secs(60);
    check(
        within(w1, 1.0) && within(s1, 2.0) && within(w2, wq) && t1 <= limit && t2 <= limit,
        format!(
            "M/M/1 W={w1:.4} S={s1:.4} ({:.1}s); M/M/2 W={w2:.4} vs {wq:.4} ({:.1}s)",
            t1.as_secs_f64(),
            t2.as_secs_f64()
        ),
    )
}

fn monotonicity_and_convexity() -> Outcome {
    let mut probes = 0usize;
    for i in 0..1000u64 {
        let kind = InstanceKind::ALL[(i % 7) as usize];
        let inst = random_instance(kind, 10_000 + i).map_err(|e| e.to_string())?;
        let mut stream = RandomStream::new(i, 77);
        let n = (stream.next_uniform() * inst.inputs.services.len() as f64) as usize;
        let k = (stream.next_uniform() * inst.inputs.services[n].len() as f64) as usize;
        let mut grown = inst.inputs.clone();
        grown.services[n][k] += 0.01 + 2.0 * stream.next_uniform();
        let run = |inputs: &ModelInputs| {
            simulate(&inst.model, inputs, inst.horizon).map(|p| all_epochs(&p))
        };
        let (before, after) = (
            run(&inst.inputs).map_err(|e| e.to_string())?,
            run(&grown).map_err(|e| e.to_string())?,
        );
        if let Some(j) = (0..before.len()).find(|&j| after[j] < before[j]) {
            return Err(format!(
                "{kind:?} instance {i}: epoch {j} fell from {} to {}",
                before[j], after[j]
            ));
        }
        probes += 1;
    }
    let max_plus = [
        InstanceKind::Gg1,
        InstanceKind::Tandem,
        InstanceKind::Manufacturing,
        InstanceKind::Communication,
        InstanceKind::ClosedTandem,
    ];
    let mut worst = f64::NEG_INFINITY;
    for i in 0..200u64 {
        let kind = max_plus[(i % 5) as usize];
        let x = random_instance(kind, 20_000 + i).map_err(|e| e.to_string())?;
        let mut stream = RandomStream::new(i, 91);
        let mut other = |v: &[f64]| {
            v.iter()
                .map(|_| 3.0 * stream.next_uniform())
                .collect::<Vec<_>>()
        };
        let y = ModelInputs::new(
            other(&x.inputs.interarrivals),
            x.inputs.services.iter().map(|s| other(s)).collect(),
        );
        let mid = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(p, q)| 0.5 * p + 0.5 * q)
                .collect::<Vec<_>>()
        };
        let z = ModelInputs::new(
            mid(&x.inputs.interarrivals, &y.interarrivals),
            x.inputs
                .services
                .iter()
                .zip(&y.services)
                .map(|(a, b)| mid(a, b))
                .collect(),
        );
        let run = |inputs: &ModelInputs| {
            simulate(&x.model, inputs, x.horizon)
                .map(|p| all_epochs(&p))
                .map_err(|e| e.to_string())
        };
        let (dx, dy, dz) = (run(&x.inputs)?, run(&y)?, run(&z)?);
        for j in 0..dz.len() {
            let chord = 0.5 * (dx[j] + dy[j]);
            let excess = dz[j] - chord;
            worst = worst.max(excess);
            if excess > 1e-9 * chord.max(1.0) {
                return Err(format!(
                    "{kind:?} probe {i}: midpoint {} above chord {chord}",
                    dz[j]
                ));
            }
        }
    }
    Ok(format!(
        "{probes} single-service increases never lowered an epoch; 200 midpoint probes, largest excess over chord {worst:e}"
    ))
}

fn ipa_correctness() -> Outcome {
    // deterministic paths: every service time scaled by θ
    let mut worst = 0.0f64;
    let mut paths = 0usize;
    let theta = 1.3;
    let h = 1e-6;
    for i in 0..140u64 {
        let kind = InstanceKind::ALL[(i % 7) as usize];
        let inst = random_instance_with(kind, 30_000 + i, 40, Grid::Continuous)
            .map_err(|e| e.to_string())?;
        let tangent_inputs = ModelInputs::new(
            inst.inputs
                .interarrivals
                .iter()
                .map(|&a| TangentEpoch::new(a, 0.0))
                .collect(),
            inst.inputs
                .services
                .iter()
                .map(|s| s.iter().map(|&t| TangentEpoch::new(theta * t, t)).collect())
                .collect(),
        );
        let run = propagate_tangents(&inst.model, &tangent_inputs, inst.horizon)
            .map_err(|e| e.to_string())?;
        if run.ties != 0 {
            return Err(format!("{kind:?} instance {i} has {} ties", run.ties));
        }
        let at = |th: f64| {
            let inputs = ModelInputs::new(
                inst.inputs.interarrivals.clone(),
                inst.inputs
                    .services
                    .iter()
                    .map(|s| s.iter().map(|t| th * t).collect())
                    .collect(),
            );
            simulate(&inst.model, &inputs, inst.horizon)
                .map(|p| all_epochs(&p))
                .map_err(|e| e.to_string())
        };
        let (up, down) = (at(theta + h)?, at(theta - h)?);
        let mut tangents: Vec<f64> = run
            .path
            .departures
            .concat()
            .iter()
            .map(|d| d.tangent)
            .collect();
        if let Some(c) = &run.path.completions {
            tangents.extend(c.iter().map(|d| d.tangent));
        }
        for j in 0..tangents.len() {
            let fd = (up[j] - down[j]) / (2.0 * h);
            let rel = if fd == 0.0 && tangents[j] == 0.0 {
                0.0
            } else {
                (tangents[j] - fd).abs() / fd.abs().max(tangents[j].abs())
            };
            worst = worst.max(rel);
        }
        paths += 1;
    }
    if worst > 1e-6 {
        return Err(format!(
            "tangent vs central difference relative error {worst:e}"
        ));
    }

    // M/M/1 system time against the service-time scale
    let sm = StochasticModel {
        model: ModelSpec::Gg1,
        interarrival: Some(DistributionSpec::exponential(0.5)),
        services: vec![DistributionSpec::bound(
            Family::Exponential { rate: 1.0 },
            ThetaBinding::Scale(0),
        )],
    };
    let measures = ["S[0]".parse::<Measure>().unwrap()];
    let mut overlaps = 0;
    let mut gap = 0.0f64;
    for rep in 0..30u64 {
        let mc = MonteCarlo::new(5_000 + rep);
        let ipa =
            ipa_gradient(&sm, &measures, &[1.0], 0, 100, 100, &mc).map_err(|e| e.to_string())?;
        let fd = fd_gradient(&sm, &measures, &[1.0], 0, 0.01, 100, 100, &mc)
            .map_err(|e| e.to_string())?;
        if ipa[0].estimate.overlaps(&fd[0]) {
            overlaps += 1;
        }
        gap = gap.max((ipa[0].estimate.mean - fd[0].mean).abs());
    }
    check(
        overlaps == 30,
        format!(
            "{paths} tie-free paths, relative error {worst:e}; M/M/1 dS/dθ intervals overlap in {overlaps}/30 (largest mean gap {gap:.4})"
        ),
    )
}

fn variance_reduction() -> Outcome {
    let sm = StochasticModel {
        model: ModelSpec::Gg1,
        interarrival: Some(DistributionSpec::exponential(0.5)),
        services: vec![DistributionSpec::bound(
            Family::Exponential { rate: 1.0 },
            ThetaBinding::Scale(0),
        )],
    };
    let measures = ["S[0]".parse::<Measure>().unwrap()];
    let (k, pairs) = (100, 500);
    let (mut av_wins, mut crn_wins) = (0, 0);
    let mut ratio = 0.0;
    for trial in 0..100u64 {
        let mc = MonteCarlo::new(70_000 + trial);
        let av = estimate_antithetic(&sm, &measures, &[1.0], k, pairs, &mc)
            .map_err(|e| e.to_string())?;
        let crude = estimate_finite_horizon(&sm, &measures, &[1.0], k, 2 * pairs, &mc)
            .map_err(|e| e.to_string())?;
        ratio += av[0].estimator_variance() / crude[0].estimator_variance() / 100.0;
        if av[0].estimator_variance() < crude[0].estimator_variance() {
            av_wins += 1;
        }
        let crn = estimate_crn_difference(&sm, &measures, &[1.1], &[1.0], k, pairs, &mc)
            .map_err(|e| e.to_string())?;
        let ind = estimate_independent_difference(&sm, &measures, &[1.1], &[1.0], k, pairs, &mc)
            .map_err(|e| e.to_string())?;
        if crn[0].variance < ind[0].variance {
            crn_wins += 1;
        }
    }
    check(
        av_wins >= 95 && crn_wins >= 95,
        format!(
            "antithetic beat crude in {av_wins}/100 trials (mean variance ratio {ratio:.3}), CRN beat independent in {crn_wins}/100"
        ),
    )
}

fn reproducibility() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |cfg: &Path, out: &Path, threads: &str| -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_recursim"))
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--quiet",
                "--threads",
                threads,
            ])
            .status()
            .map_err(|e| e.to_string())?;
        if status.success() {
            Ok(())
        } else {
            Err(format!("{} exited with {status}", cfg.display()))
        }
    };
    let snapshot = |dir: &Path| -> Vec<(PathBuf, Vec<u8>)> {
        let mut v: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .map(|p| (PathBuf::from(p.file_name().unwrap()), fs::read(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    let mut compared = 0;
    for name in [
        "mm1_estimate.toml",
        "mm1_ipa.toml",
        "tandem_crn.toml",
        "closed_network_path.toml",
    ] {
        let cfg = configs.join(name);
        let base = root.path().join(format!("{name}-base"));
        run(&cfg, &base, "1")?;
        let reference = snapshot(&base);
        for (tag, threads) in [("again", "1"), ("two", "2"), ("eight", "8")] {
            let dir = root.path().join(format!("{name}-{tag}"));
            run(&cfg, &dir, threads)?;
            if snapshot(&dir) != reference {
                return Err(format!("{name} differs with {threads} threads"));
            }
            compared += 1;
        }
        let replay = root.path().join(format!("{name}-manifest"));
        run(&base.join("manifest.json"), &replay, "3")?;
        if snapshot(&replay) != reference {
            return Err(format!("{name} differs when rerun from its manifest"));
        }
        compared += 1;
    }
    Ok(format!(
        "{compared} reruns (1, 2 and 8 threads, manifest replay) byte-identical over 4 configs"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("subset-formula equivalence", subset_formulas),
        ("stated reductions", reductions),
        ("metric identities", metric_identities),
        ("analytic steady state", analytic_steady_state),
        ("monotonicity and convexity", monotonicity_and_convexity),
        ("IPA correctness", ipa_correctness),
        ("variance reduction", variance_reduction),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
