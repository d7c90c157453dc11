use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_recursim"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    let text =
        String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().to_string(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn path_mode_writes_departures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("gg1_path.toml");
    let (code, text) = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code, 0, "{text}");
    let mut reader = csv::Reader::from_path(dir.path().join("path.csv")).unwrap();
    let d: Vec<f64> = reader
        .records()
        .map(|r| r.unwrap()[3].parse().unwrap())
        .collect();
    assert_eq!(d, vec![3.0, 5.0, 7.0]);
    assert!(text.is_empty());
}

#[test]
fn reruns_are_byte_identical_across_threads_and_manifest() {
    let cfg = configs().join("mm1_estimate.toml");
    let cfg = cfg.to_str().unwrap();
    let dirs: Vec<_> = (0..4).map(|_| tempfile::tempdir().unwrap()).collect();
    let out = |i: usize| dirs[i].path().to_str().unwrap().to_string();
    assert_eq!(
        run(&[
            "--config",
            cfg,
            "--out",
            &out(0),
            "--quiet",
            "--threads",
            "1"
        ])
        .0,
        0
    );
    assert_eq!(
        run(&[
            "--config",
            cfg,
            "--out",
            &out(1),
            "--quiet",
            "--threads",
            "4"
        ])
        .0,
        0
    );
    assert_eq!(run(&["--config", cfg, "--out", &out(2), "--quiet"]).0, 0);
    let manifest = dirs[0].path().join("manifest.json");
    assert_eq!(
        run(&[
            "--config",
            manifest.to_str().unwrap(),
            "--out",
            &out(3),
            "--quiet"
        ])
        .0,
        0
    );
    let first = read_all(dirs[0].path());
    assert_eq!(first.len(), 3);
    for d in &dirs[1..] {
        assert_eq!(read_all(d.path()), first);
    }
}

#[test]
fn seed_flag_overrides_file() {
    let cfg = configs().join("mm1_estimate.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = cfg.to_str().unwrap();
    run(&[
        "--config",
        cfg,
        "--out",
        a.path().to_str().unwrap(),
        "--quiet",
    ]);
    run(&[
        "--config",
        cfg,
        "--out",
        b.path().to_str().unwrap(),
        "--quiet",
        "--seed",
        "1",
    ]);
    let s = |d: &Path| fs::read_to_string(d.join("summary.json")).unwrap();
    assert_ne!(s(a.path()), s(b.path()));
    assert!(s(b.path()).contains("\"seed\": 1"));
}

#[test]
fn built_in_corpus_validates() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run(&["--validate", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    let table = fs::read_to_string(dir.path().join("validation.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 7 * 30);
    assert!(!table.contains("mismatch"));
}

#[test]
fn config_validate_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("blocking_validate.toml");
    let (code, text) = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{text}");
}

#[test]
fn bundled_configs_run() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec![
            "--config",
            path.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--quiet",
        ];
        // keep the long steady-state runs short here
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let short;
        if name.contains("steady") {
            let text = fs::read_to_string(&path)
                .unwrap()
                .replace("horizon = 1000000", "horizon = 50000");
            short = dir.path().join("short.toml");
            fs::write(&short, text.replace("warmup = 10000", "warmup = 500")).unwrap();
            args[1] = short.to_str().unwrap();
        }
        let (code, text) = run(&args);
        assert_eq!(code, 0, "{name}: {text}");
    }
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "mode = \"path\"\nhorizon = 0\n[model]\nkind = \"gg1\"\n",
    )
    .unwrap();
    assert_eq!(
        run(&[
            "--config",
            bad.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap()
        ])
        .0,
        1
    );
    fs::write(&bad, "horizon = [\n").unwrap();
    assert_eq!(run(&["--config", bad.to_str().unwrap()]).0, 1);
    assert_eq!(run(&["--config", "/nonexistent/x.toml"]).0, 1);
    assert_eq!(run(&["--mode", "estimate"]).0, 1);
    assert_eq!(run(&["--no-such-flag"]).0, 1);
}

#[test]
fn simulation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("net.toml");
    // node 0 hands its only customer to node 1, which keeps it: node 0 starves
    fs::write(
        &cfg,
        r#"
mode = "path"
horizon = 2
[model]
kind = "network"
populations = [1, 0]
routing = [{ periodic = [1] }, { periodic = [1] }]
[inputs]
services = [[1, 1], [1, 1]]
"#,
    )
    .unwrap();
    let (code, text) = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{text}");
    assert!(text.contains("horizon"), "{text}");
}
