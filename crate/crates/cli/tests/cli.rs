use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn contract(id: &str) -> String {
    fixtures().join("contracts").join(format!("{id}.json")).display().to_string()
}

fn evmscope(args: &[&str]) -> Output {
    let reg = fixtures().join("registry.csv").display().to_string();
    Command::new(env!("CARGO_BIN_EXE_evmscope"))
        .args(args)
        .args(["--registry-fixture", &reg])
        .output()
        .unwrap()
}

#[test]
fn clean_contract_exits_zero() {
    let o = evmscope(&["analyze", &contract("micarstoken")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["critical_paths"].as_array().unwrap().is_empty());
}

#[test]
fn violations_exit_two() {
    let o = evmscope(&["analyze", &contract("toydao"), "--transfer-limit", "30", "--call-bound", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let top = &v["critical_paths"][0]["call_sequence"];
    assert_eq!(top, &serde_json::json!(["withdraw()", "\u{21a9}withdraw()"]));
}

#[test]
fn input_errors_exit_one() {
    assert_eq!(evmscope(&["analyze", "/nonexistent/contract.json"]).status.code(), Some(1));
    assert_eq!(evmscope(&["analyze", &contract("toydao"), "--call-bound", "x"]).status.code(), Some(1));
    assert_eq!(evmscope(&["analyze", &contract("toydao"), "--alpha", "Nope=3"]).status.code(), Some(1));
    let help = Command::new(env!("CARGO_BIN_EXE_evmscope")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn writes_both_formats_and_dot() {
    let tmp = tempfile::tempdir().unwrap();
    let base = tmp.path().join("bitway");
    let dot = tmp.path().join("bitway.dot");
    let o = evmscope(&[
        "analyze",
        &contract("bitway"),
        "--output",
        "both",
        "--out",
        base.to_str().unwrap(),
        "--dump-cfg",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let json = std::fs::read_to_string(tmp.path().join("bitway.json")).unwrap();
    assert!(json.contains("BlackHole"));
    let html = std::fs::read_to_string(tmp.path().join("bitway.html")).unwrap();
    assert!(html.starts_with("<!DOCTYPE html>"));
    let dot = std::fs::read_to_string(dot).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("Node_0_"));
}

#[test]
fn config_file_sets_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("evmscope.toml");
    std::fs::write(&cfg, "[bounds]\ncall_bound = 2\n\n[analyzers]\ntransfer_limit = 30\n").unwrap();
    let o = evmscope(&["analyze", &contract("toydao"), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(&cfg, "[bounds]\nbogus = 1\n").unwrap();
    let o = evmscope(&["analyze", &contract("toydao"), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
