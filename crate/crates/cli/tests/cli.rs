use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_levy-expfun");

const QUADRATIC: &str = r#"{"drift": -1, "gaussian2": 2}"#;
const DRIFTED: &str = r#"{"drift": 1, "gaussian2": 2}"#;
const UNIT_JUMP: &str = r#"{"drift": -1, "jumps": {"family": "point_masses", "masses": [{"size": 1, "rate": 1}]}, "cutoff": "identity"}"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("LEVY_EXPFUN_SEED").output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = run(&all);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn close(a: &Value, b: f64, tol: f64) -> bool {
    (a.as_f64().unwrap() - b).abs() <= tol
}

#[test]
fn example_specs_round_trip_with_the_same_tau() {
    let dir = tempfile::tempdir().unwrap();
    for (spec, tau, psi_tau) in [(QUADRATIC, 0.5, -0.25), (DRIFTED, 0.0, 0.0), (UNIT_JUMP, 2f64.ln(), 1.0 - 2.0 * 2f64.ln())] {
        let first = json(&["analyze", "--spec", spec]);
        assert!(close(&first["tau"], tau, 1e-10), "{spec}: τ = {}", first["tau"]);
        assert!(close(&first["psi_tau"], psi_tau, 1e-10));
        let echoed = dir.path().join("spec.json");
        std::fs::write(&echoed, first["config"]["spec"].to_string()).unwrap();
        let second = json(&["analyze", "--spec", echoed.to_str().unwrap()]);
        assert_eq!(first["tau"], second["tau"]);
        assert_eq!(first["config_hash"], second["config_hash"]);
    }
}

#[test]
fn spec_file_and_literal_give_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("spec.json");
    std::fs::write(&file, QUADRATIC).unwrap();
    let common = ["estimate", "--target", r#"{"kind":"power_neg","p":0.5}"#, "--times", "1,2", "-n", "500", "--seed", "9"];
    let a = run(&[&common[..], &["--spec", QUADRATIC]].concat());
    let b = run(&[&common[..], &["--spec", file.to_str().unwrap()]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn malformed_spec_exits_2_naming_the_field() {
    let out = run(&["analyze", "--spec", r#"{"drift": 0, "jumps": {"family": "two_sided_exponential", "rate_pos": "x"}}"#]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("jumps"), "{err}");

    let out = run(&["analyze", "--spec", r#"{"drift": 0, "gaussian2": -1}"#]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"spec": {"drift": 1}, "sample_count": 4}"#).unwrap();
    let out = run(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sample_count"));
}

#[test]
fn classify_examples() {
    let rep = |spec: &str, p: &str| json(&["classify", "--spec", spec, "--p", p])["report"].clone();
    let r = rep(QUADRATIC, "1");
    assert_eq!(r["label"], "IIIc");
    assert!(close(&r["r"], 0.25, 1e-12) && close(&r["gamma"], 1.5, 0.0));
    assert_eq!(rep(DRIFTED, "1")["label"], "I");
    assert_eq!(rep(r#"{"drift": 0, "gaussian2": 2}"#, "1")["label"], "II");
    let a = rep(QUADRATIC, "0.25");
    assert_eq!(a["label"], "IIIa");
    assert!(close(&a["r"], 0.1875, 1e-12));
    assert_eq!(rep(QUADRATIC, "0.5")["label"], "IIIb");

    let text = run(&["classify", "--spec", QUADRATIC, "--p", "1"]);
    let text = String::from_utf8_lossy(&text.stdout);
    assert!(text.contains("label: IIIc") && text.contains("t^{-1.5} e^{-0.25t}"), "{text}");
}

#[test]
fn classify_exit_codes() {
    // p outside (0, θ⁺) is a configuration error
    let out = run(&["classify", "--spec", r#"{"drift": 1, "jumps": {"family": "two_sided_exponential", "rate_pos": 1, "mean_pos": 0.5, "rate_neg": 1, "mean_neg": 0.5}}"#, "--p", "3"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    // e^{-x} in the exponential regime has no valid branch
    let out = run(&["classify", "--spec", QUADRATIC, "--target", r#"{"kind":"exp_neg"}"#, "--p", "0.25"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn application_classifier() {
    let rep = json(&["classify", "--application", "survival", "--spec", r#"{"drift": -3, "gaussian2": 2}"#, "--beta", "1"]);
    assert_eq!(rep["environment"]["label"], "IIIa");
    assert_eq!(rep["environment"]["regime"], "strongly subcritical");
    assert!(close(&rep["environment"]["r"], 2.0, 1e-12));
}

#[test]
fn same_seed_reruns_are_byte_identical() {
    let args = ["fit", "--spec", QUADRATIC, "--target", r#"{"kind":"power_neg","p":1}"#, "--times", "geom:1:16:5", "-n", "400", "--tilt", "0.5"];
    let a = run(&[&args[..], &["--seed", "3"]].concat());
    let b = run(&[&args[..], &["--seed", "3"]].concat());
    let c = run(&[&args[..], &["--seed", "4"]].concat());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn seed_falls_back_to_environment() {
    let out = Command::new(BIN)
        .args(["analyze", "--spec", QUADRATIC, "--format", "json"])
        .env("LEVY_EXPFUN_SEED", "77")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 77);
    let flag = Command::new(BIN)
        .args(["analyze", "--spec", QUADRATIC, "--format", "json", "--seed", "5"])
        .env("LEVY_EXPFUN_SEED", "77")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&flag.stdout).unwrap();
    assert_eq!(v["seed"], 5);
}

#[test]
fn output_file_and_gnuplot_script() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("est.csv");
    let res = run(&[
        "estimate", "--spec", DRIFTED, "--target", r#"{"kind":"power_neg","p":1}"#, "--times", "1,2,4", "-n", "200",
        "--out", out.to_str().unwrap(), "--gnuplot",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(res.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let head: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    assert!(head["config_hash"].as_str().unwrap().len() == 64);
    assert_eq!(head["library_version"], head["version"]);
    assert!(lines.next().unwrap().starts_with("t,mean,stderr"));
    assert_eq!(lines.count(), 3);
    assert!(Path::new(&format!("{}.gp", out.display())).exists());
}

#[test]
fn check_all_passes_on_the_reference_spec() {
    let out = run(&["check", "all", "--seed", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.contains(",true,")).count(), 12, "{text}");
}

#[test]
fn applications_emit_rates() {
    let v = json(&["app", "survival", "--spec", r#"{"drift": -3, "gaussian2": 2}"#, "--beta", "1", "--times", "1,2", "-n", "300", "--tilt", "auto"]);
    let rows = v["estimates"].as_array().expect("estimates array");
    assert_eq!(rows.len(), 2);
    assert_eq!(v["report"]["label"], "IIIa");
}
