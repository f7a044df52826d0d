use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn betacoal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betacoal"))
        .args(args)
        .env("BETACOAL_OUT_DIR", dir.join("out"))
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn record_scan_is_reproducible_and_checksummed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["scan", "record", "--a", "0.5", "--b", "1.5", "--n", "1..50"];
    assert_eq!(betacoal(dir.path(), &args).status.code(), Some(0));
    let csv_path = dir.path().join("out/scan-record-a0.5-b1.5.csv");
    let first = fs::read(&csv_path).unwrap();
    assert_eq!(betacoal(dir.path(), &args).status.code(), Some(0));
    assert_eq!(first, fs::read(&csv_path).unwrap());

    let text = String::from_utf8(first).unwrap();
    let mut lines = text.split("\r\n");
    assert_eq!(lines.next(), Some("n,record_probability"));
    assert_eq!(lines.next(), Some("1,1.0000000000000000e0"));

    let m = manifest(&dir.path().join("out/scan-record-a0.5-b1.5.manifest.json"));
    assert_eq!(m["command"], "scan record");
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1);
    assert_eq!(outputs[0]["rows"], 50);
    assert_eq!(outputs[0]["sha256"].as_str().unwrap(), betacoal::export::sha256_hex(text.as_bytes()));
}

#[test]
fn lln_scan_on_the_a2_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = betacoal(dir.path(), &["scan", "lln", "--a", "2", "--b", "1", "--n", "10,100"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/scan-lln-a2-b1.csv")).unwrap();
    let target = 6.0 / std::f64::consts::PI.powi(2);
    for line in text.lines().skip(1) {
        let limit: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((limit - target).abs() < 1e-12);
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "# defaults\na = 0.5\nb = 1.5\nn-grid = 1..5\nout-dir = cfg-out\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_betacoal"))
        .args(["--config", "run.cfg", "scan", "record", "--n", "1..3"])
        .env_remove("BETACOAL_OUT_DIR")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("cfg-out/scan-record-a0.5-b1.5.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);

    fs::write(dir.path().join("bad.cfg"), "colour = red\n").unwrap();
    let out = betacoal(dir.path(), &["--config", "bad.cfg", "scan", "record"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| betacoal(dir.path(), args).status.code();
    assert_eq!(code(&["scan", "record", "--a", "1.5", "--b", "1"]), Some(3));
    assert_eq!(code(&["scan", "kolmogorov", "--a", "0.5", "--b", "0.4"]), Some(3));
    assert_eq!(code(&["scan", "laplace-exponent", "--a", "1.5", "--b", "1", "--theta", "5"]), Some(3));
    assert_eq!(code(&["scan", "record", "--a", "0.5"]), Some(2));
    assert_eq!(code(&["scan", "record", "--a", "0.5", "--b", "1.5", "--unknown"]), Some(2));
    assert_eq!(code(&["scan", "laplace-exponent", "--a", "1.5", "--b", "1"]), Some(2));
    assert_eq!(code(&["scan", "record", "--a", "-1", "--b", "1"]), Some(2));
    assert_eq!(code(&["verify", "nothing"]), Some(2));
}

#[test]
fn ratefn_scan_has_a_knee() {
    let dir = tempfile::tempdir().unwrap();
    let out = betacoal(dir.path(), &["scan", "ratefn", "--a", "1.5", "--b", "1", "--x", "0..3/0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let m = manifest(&dir.path().join("out/scan-ratefn-a1.5-b1-k2.manifest.json"));
    let xk = m["parameters"]["x_k"].as_f64().unwrap();
    let text = fs::read_to_string(dir.path().join("out/scan-ratefn-a1.5-b1-k2.csv")).unwrap();
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        if v[0] <= xk {
            assert_eq!(v[1], v[2]);
        } else {
            assert!(v[2] < v[1]);
        }
    }
}

#[test]
fn verify_duality_passes_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = betacoal(dir.path(), &["verify", "duality"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    let m = manifest(&dir.path().join("out/verify-duality.manifest.json"));
    assert_eq!(m["checks"].as_array().unwrap().len(), 2);
    assert_eq!(m["seed"], 42);
    assert!(dir.path().join("out/verify-duality.csv").exists());
}

#[test]
fn help_documents_flags() {
    let dir = tempfile::tempdir().unwrap();
    let help = String::from_utf8(betacoal(dir.path(), &["scan", "--help"]).stdout).unwrap();
    for flag in ["--a", "--b", "--n-grid", "--x", "--theta", "--ell", "--k", "--replicates", "--seed", "--trunc", "--out-dir", "--config"] {
        assert!(help.contains(flag), "missing {flag}");
    }
}
