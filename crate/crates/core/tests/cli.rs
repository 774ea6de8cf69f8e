use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn edmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edmc"))
        .args(args)
        .output()
        .unwrap()
}

fn config(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn selfcheck_passes() {
    let out = edmc(&["selfcheck"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 6);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn solve_prints_a_report() {
    let out = edmc(&["--config", &config("square.toml"), "--seed", "3", "solve"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["re"].as_f64().unwrap() < 1e-5);
    assert_eq!(v["solver"], "rank-reduction");
}

#[test]
fn simulate_then_solve_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = edmc(&[
        "--config",
        &config("square.toml"),
        "--seed",
        "4",
        "--out",
        d,
        "simulate",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    for f in ["scene.json", "measurements.csv", "measurements.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let scene: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("scene.json")).unwrap()).unwrap();
    let truth: Vec<Vec<f64>> = serde_json::from_value(scene["positions"].clone()).unwrap();

    let m = dir.path().join("measurements.csv");
    let out = edmc(&[
        "solve",
        "--measurements",
        m.to_str().unwrap(),
        "--solver",
        "rcg",
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let est: Vec<Vec<f64>> = serde_json::from_value(v["positions"].clone()).unwrap();
    assert_eq!(est.len(), truth.len());
    let sq = |p: &[Vec<f64>], a: usize, b: usize| {
        (p[a][0] - p[b][0]).powi(2) + (p[a][1] - p[b][1]).powi(2)
    };
    let worst = (0..truth.len())
        .flat_map(|a| (0..a).map(move |b| (a, b)))
        .map(|(a, b)| (sq(&est, a, b) - sq(&truth, a, b)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "worst distance error {worst}");
}

#[test]
fn sweep_writes_csv() {
    let out = edmc(&["--config", &config("square.toml"), "sweep"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("value,solver,re_q85,msle_q85,success,wall_ms"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn basin_probe_json() {
    let out = edmc(&["basin-probe", "--n", "60", "--draws", "5"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["draws"], 5);
    assert!(v["convexity"]["min"].as_f64().unwrap() > 0.0);
}

#[test]
fn errors_are_json_with_nonzero_exit() {
    let out = edmc(&["--config", "/nonexistent.toml", "solve"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["error"].is_string());

    let out = edmc(&["solve", "--solver", "simplex"]);
    assert_eq!(out.status.code(), Some(1));

    let out = edmc(&["phase-grid"]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(edmc(&["--bogus"]).status.code(), Some(2));
}
