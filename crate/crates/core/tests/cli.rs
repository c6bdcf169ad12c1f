use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qhm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhm")).args(args).env_remove("QHM_DEFAULT_TOL").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_fixture() {
    let v = json(&qhm(&["classify", "--fixture", "nw-thm2.9a"]));
    assert_eq!(v["verdict"], "NotQuasihypermetric");
    let v = json(&qhm(&["classify", "--fixture", "nw-thm2.9"]));
    assert_eq!(v["verdict"], "NonStrict");
}

#[test]
fn mconstant_reports_value_and_measure() {
    let v = json(&qhm(&["mconstant", "--fixture", "interval-5"]));
    assert_eq!(v["status"], "Finite");
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let v = json(&qhm(&["mconstant", "--fixture", "nw-thm2.9"]));
    assert_eq!(v["status"], "Infinite");
    assert_eq!(v["reason"], "NonzeroFlatKernel");
}

#[test]
fn energy_with_inline_weights() {
    let v = json(&qhm(&["energy", "--fixture", "interval-2", "--weights", "0.5,0.5"]));
    assert!((v["energy"].as_f64().unwrap() - 0.5).abs() < 1e-15, "{v}");
}

#[test]
fn glue_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.json");
    let z = dir.path().join("z.json");
    assert!(qhm(&["fixtures", "--key", "interval-2", "--out", path(&x)]).status.success());
    let out = qhm(&["glue", "--x", path(&x), "--y", path(&x), "--c", "0.75", "--out", path(&z)]);
    assert!(out.status.success());
    let v = json(&qhm(&["mconstant", "--space", path(&z)]));
    // (c^2 - m_x m_y) / (2c - m_x - m_y) with m_x = m_y = 1/2.
    assert!((v["value"].as_f64().unwrap() - 0.625).abs() < 1e-12, "{v}");
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"matrix": [[0, 1], [2, 0]]}"#).unwrap();
    let out = qhm(&["classify", "--space", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("asymmetry"));

    let x = dir.path().join("x.json");
    assert!(qhm(&["fixtures", "--key", "interval-3", "--out", path(&x)]).status.success());
    let out = qhm(&["glue", "--x", path(&x), "--y", path(&x), "--c", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qhm(&["nope"]).status.code(), Some(1));
    assert_eq!(qhm(&["classify"]).status.code(), Some(1));
    assert_eq!(qhm(&["--help"]).status.code(), Some(0));
}

#[test]
fn fixture_checks_pass() {
    let v = json(&qhm(&["fixtures", "--check"]));
    let checks = v.as_array().expect("array of checks");
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["check"]["passed"] == true), "{v}");
}

#[test]
fn converge_writes_csv() {
    let out = qhm(&["converge", "--family", "interval", "--sizes", "2,3,5", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,size,n_k,status,m_value,I_mu,flatness,seminorm_step,error,elapsed_ms");
    assert_eq!(lines.count(), 3);
}

#[test]
fn tolerance_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_qhm"))
        .args(["classify", "--fixture", "circle-4"])
        .env("QHM_DEFAULT_TOL", "1e-6")
        .output()
        .unwrap();
    let v = json(&out);
    let radius = v["eigenvalues"].as_array().unwrap().iter().map(|e| e.as_f64().unwrap().abs()).fold(0.0, f64::max);
    assert!((v["tol_used"].as_f64().unwrap() - 1e-6 * radius).abs() < 1e-15);
}
