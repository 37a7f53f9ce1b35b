use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(args)
        .env_remove("ANISO_TUNE_JOBS")
        .output()
        .expect("spawn bench")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

/// Everything after the embedded-config line.
fn body(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.split_once('\n').unwrap().1.to_string()
}

#[test]
fn unknown_kind_prints_usage_and_exits_2() {
    let out = bench(&["nosuch"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage:"), "{}", stderr(&out));
}

#[test]
fn unknown_flag_exits_2() {
    let out = bench(&["rosenbrock", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage:"));
    assert_eq!(bench(&[]).status.code(), Some(2));
}

#[test]
fn list_names_kinds_and_algorithms() {
    let out = bench(&["--list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["rosenbrock", "tune-ising", "convergence", "fixed-window", "spsa"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn rosenbrock_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("r4.json");
    fs::write(&cfg, r#"{"kind": "rosenbrock", "problem": {"dim": 4, "beta": 0.5}, "budget": 4000}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = bench(&["rosenbrock", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let s = summary(&out_dir);
    assert_eq!(s["per_seed"].as_array().unwrap().len(), 5);
    let (worst, mean, best) = (s["worst"].as_f64().unwrap(), s["mean"].as_f64().unwrap(), s["best"].as_f64().unwrap());
    assert!(worst <= mean && mean <= best);
    assert_eq!(s["config"]["optimizer"]["b0"], 40);
    for seed in 1..=5 {
        let trace = fs::read_to_string(out_dir.join(format!("seed_{seed}.csv"))).unwrap();
        assert!(trace.lines().nth(1).unwrap().starts_with("step,n_s,window_norm,fitness"));
    }
}

#[test]
fn budget_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"kind": "artificial", "budget": 100000}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = bench(&[
        "artificial",
        "--config",
        cfg.to_str().unwrap(),
        "--budget",
        "100",
        "--seeds",
        "3,4",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let s = summary(&out_dir);
    assert_eq!(s["config"]["budget"], 100);
    assert_eq!(s["config"]["seeds"], serde_json::json!([3, 4]));
    for seed in s["per_seed"].as_array().unwrap() {
        assert!(seed["samples"].as_u64().unwrap() <= 100);
    }
}

#[test]
fn reruns_are_byte_identical_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"kind": "rosenbrock", "problem": {"dim": 2}, "budget": 5000, "seeds": [1, 2, 3]}"#,
    )
    .unwrap();
    let run = |name: &str, jobs: &str| {
        let out_dir = dir.path().join(name);
        let out = bench(&["rosenbrock", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--jobs", jobs]);
        assert!(out.status.success(), "{}", stderr(&out));
        out_dir
    };
    let a = run("a", "1");
    let first = fs::read(a.join("seed_2.csv")).unwrap();
    let again = run("a", "1");
    assert_eq!(first, fs::read(again.join("seed_2.csv")).unwrap());
    let b = run("b", "4");
    for seed in 1..=3 {
        let name = format!("seed_{seed}.csv");
        assert_eq!(body(&a.join(&name)), body(&b.join(&name)));
    }
}

#[test]
fn embedded_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("first");
    let out = bench(&["eigenratio", "--budget", "3000", "--seeds", "5", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let first = fs::read_to_string(out_dir.join("seed_5.csv")).unwrap();
    let embedded = first.lines().next().unwrap().strip_prefix("# config=").unwrap();
    let cfg = dir.path().join("embedded.json");
    fs::write(&cfg, embedded).unwrap();
    let out = bench(&["eigenratio", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(first, fs::read_to_string(out_dir.join("seed_5.csv")).unwrap());
}

#[test]
fn invalid_config_lists_every_issue() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"kind": "rosenbrock", "budget": 0, "colour": 1}"#).unwrap();
    let out = bench(&["rosenbrock", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("budget must be ≥ 1"), "{err}");
    assert!(err.contains("colour: unknown key"), "{err}");
}

#[test]
fn config_for_another_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"kind": "alignment"}"#).unwrap();
    let out = bench(&["rosenbrock", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tune_sat_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sat.json");
    fs::write(&cfg, r#"{"kind": "tune-sat", "problem": {"n": 20}, "budget": 1000, "seeds": [1]}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = bench(&["tune-sat", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let s = summary(&out_dir);
    let v = s["per_seed"][0]["value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&v));
    assert!(s["per_seed"][0]["samples"].as_u64().unwrap() <= 1000);
    let held = fs::read_to_string(out_dir.join("held_out_seed_1.csv")).unwrap();
    assert_eq!(held.lines().count(), 4);
}
