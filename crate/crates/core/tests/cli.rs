use std::fs;
use std::path::{Path, PathBuf};

use fourier_pairs::cli::{run, EXIT_PRECONDITION, EXIT_USAGE, EXIT_VERIFICATION};
use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn call(args: &[&str]) -> i32 {
    run(std::iter::once("fourier-pairs").chain(args.iter().copied()))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, a: &str, count: &str) -> PathBuf {
    let out = dir.path().join(name);
    assert_eq!(call(&["nodes", "gen", "--p", "2", "--a", a, "--count", count, "--out", path_str(&out)]), 0);
    out
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn classify_report_envelope() {
    let dir = TempDir::new().unwrap();
    let nodes = gen(&dir, "n.json", "0.9", "400");
    let report = dir.path().join("r.json");
    let args = ["--no-timestamp", "nodes", "classify", "--input", path_str(&nodes), "--report", path_str(&report)];
    assert_eq!(call(&args), 0);
    let v = read_json(&report);
    assert_eq!(v["tool"], "fourier-pairs");
    assert_eq!(v["command"], "nodes classify");
    assert!(v.get("timestamp").is_none());
    assert_eq!(v["result"]["verdict"], "Supercritical");
    // Each input is hashed as its little-endian u64 length followed by its bytes.
    let bytes = fs::read(&nodes).unwrap();
    let mut h = Sha256::new();
    h.update((bytes.len() as u64).to_le_bytes());
    h.update(&bytes);
    let digest: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(v["input_sha256"], digest.as_str());

    let first = fs::read(&report).unwrap();
    assert_eq!(call(&args), 0);
    assert_eq!(fs::read(&report).unwrap(), first, "reports without timestamps are byte-reproducible");

    assert_eq!(call(&["nodes", "classify", "--input", path_str(&nodes), "--report", path_str(&report)]), 0);
    assert!(read_json(&report)["timestamp"].is_u64());
}

#[test]
fn usage_and_help() {
    assert_eq!(call(&["nodes", "gen", "--p", "2"]), EXIT_USAGE);
    assert_eq!(call(&["no-such-command"]), EXIT_USAGE);
    assert_eq!(call(&["--help"]), 0);
    assert_eq!(call(&["--version"]), 0);
}

#[test]
fn missing_input_is_a_precondition_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(call(&["nodes", "classify", "--input", path_str(&missing)]), EXIT_PRECONDITION);
}

#[test]
fn supercritical_build_is_refused() {
    let dir = TempDir::new().unwrap();
    let nodes = gen(&dir, "n.json", "0.9", "400");
    assert_eq!(call(&["nonuniq", "build", "--input", path_str(&nodes)]), EXIT_PRECONDITION);
}

#[test]
fn wirtinger_suite_and_negative_control() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"hermite_max": 6}"#).unwrap();
    let report = dir.path().join("w.json");
    let base = ["--no-timestamp", "verify", "wirtinger", "--config", path_str(&cfg), "--report", path_str(&report)];
    assert_eq!(call(&base), 0);
    let mut damaged = base.to_vec();
    damaged.extend(["--constant-scale", "0.5"]);
    assert_eq!(call(&damaged), EXIT_VERIFICATION);
}

#[test]
fn kp_csv_is_tidy() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("k.csv");
    let report = dir.path().join("k.json");
    assert_eq!(call(&["nonuniq", "kp", "--sigma", "0.6", "--b", "3", "--csv", path_str(&csv), "--report", path_str(&report)]), 0);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,k"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 10 && rows.iter().all(|r| r.len() == 2));
    assert_eq!(call(&["nonuniq", "kp", "--sigma", "0.6"]), EXIT_PRECONDITION);
}

#[test]
fn crystal_emit_and_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    let nodes = gen(&dir, "f.json", "0.8", "300");
    let lambda: Vec<f64> = serde_json::from_value(read_json(&nodes)["lambda"].clone()).unwrap();
    let x = lambda.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min).to_string();
    let out = dir.path().join("cr");
    assert_eq!(call(&["--no-timestamp", "crystal", "emit", "--input", path_str(&nodes), "--x", &x, "--out-dir", path_str(&out)]), 0);
    let report = dir.path().join("v.json");
    let nu = out.join("nu.json");
    let nu_hat = out.join("nu_hat.json");
    assert_eq!(call(&["crystal", "verify", "--nu", path_str(&nu), "--nu-hat", path_str(&nu_hat), "--report", path_str(&report)]), 0);
    let v = read_json(&report);
    assert!(v["result"]["worst_gap"].as_f64().unwrap() <= 1e-5);
    assert!(v["result"]["nu_l1"].as_f64().unwrap() >= 1e-8);
}

#[test]
fn hermite_reconstruction_report() {
    let dir = TempDir::new().unwrap();
    let nodes = gen(&dir, "f.json", "0.8", "300");
    let report = dir.path().join("rec.json");
    let out = dir.path().join("rec");
    let args = ["frame", "reconstruct", "--input", path_str(&nodes), "--hermite", "3", "--m", "20", "--out-dir", path_str(&out), "--report", path_str(&report)];
    assert_eq!(call(&args), 0);
    assert!(out.read_dir().unwrap().next().is_some());
    let v = read_json(&report);
    assert_eq!(v["command"], "frame reconstruct");
    assert!(v["result"].is_object());
}
