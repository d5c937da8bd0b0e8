//! End-to-end runs of the `magstar` binary: artifacts, exit codes and
//! determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn magstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magstar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn radial_writes_profile_with_hash_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("nested/a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = magstar(&["radial", "--out", path(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let side = json(&a.join("profile.json"));
    assert!((side["xi1"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-8);
    assert_eq!(side["config_hash"].as_str().unwrap().len(), 64);
    let csv = fs::read(a.join("profile.csv")).unwrap();
    assert!(csv.starts_with(b"s,rho0,h0,U0\n"));
    assert_eq!(csv, fs::read(b.join("profile.csv")).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"eos": {"gamma": 1.1}}"#);
    let o = magstar(&["radial", "--config", &cfg, "--out", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));

    let o = magstar(&["solve", "--omega2", "0.2", "--out", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("omega"));

    let o = magstar(&["radial", "--config", path(&tmp.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trivial_solve_passes_all_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let o = magstar(&["solve", "--out", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&tmp.path().join("diagnostics.json"));
    assert_eq!(d["all_pass"], Value::Bool(true));
    assert_eq!(d["oblateness"].as_f64().unwrap(), 0.0);
    let s = json(&tmp.path().join("solution.json"));
    assert_eq!(s["iterations"].as_u64(), Some(0));
}

#[test]
fn magnetized_rotating_solve_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = magstar(&["solve", "--omega2", "0.02", "--eps", "0.05", "--out", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&tmp.path().join("diagnostics.json"));
    assert!(d["momentum"]["relative"].as_f64().unwrap() < 1e-4);
    let hash = d["config_hash"].as_str().unwrap().to_owned();
    for stem in ["solution", "fields", "trace"] {
        assert_eq!(json(&tmp.path().join(format!("{stem}.json")))["config_hash"], Value::String(hash.clone()));
    }
    let fields = fs::read_to_string(tmp.path().join("fields.csv")).unwrap();
    assert_eq!(fields.lines().next(), Some("r,z,rho,psi,U,Br,Bz,Jtheta"));
    let trace = csv_rows(&tmp.path().join("trace.csv"));
    assert!(trace.len() <= 9);
}

#[test]
fn non_convergence_exits_4_and_keeps_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"tolerances": {"max_iter": 1}}"#);
    let out = tmp.path().join("out");
    let o = magstar(&["solve", "--config", &cfg, "--omega2", "0.02", "--eps", "0.05", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(csv_rows(&out.join("trace.csv")).len(), 1);
    assert!(!out.join("solution.json").exists());
}

#[test]
fn single_point_sweep_is_one_trivial_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"sweep": {"omega2": [0], "epsilon": [0]}}"#);
    let mut bytes = vec![];
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let o = magstar(&["sweep", "--config", &cfg, "--out", path(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        bytes.push(fs::read(out.join("sweep_summary.csv")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    let text = String::from_utf8(bytes.pop().unwrap()).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("0.000000e0,0.000000e0,true,0,"));
}

#[test]
fn three_by_three_sweep_keeps_mass_and_orders_oblateness() {
    let tmp = tempfile::tempdir().unwrap();
    let o = magstar(&["sweep", "--workers", "2", "--out", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&tmp.path().join("sweep_summary.csv"));
    assert_eq!(rows.len(), 9);
    let num = |r: &Vec<String>, c: usize| r[c].parse::<f64>().unwrap();
    let m0 = num(&rows[0], 8);
    for r in &rows {
        assert_eq!(r[2], "true");
        assert!((num(r, 8) - m0).abs() / m0 < 1e-9);
    }
    // rows run with omega2 fastest
    for e in 0..3 {
        let obl: Vec<f64> = (0..3).map(|w| num(&rows[3 * e + w], 5)).collect();
        assert!(obl[0] < obl[1] && obl[1] < obl[2], "{obl:?}");
    }
    assert!(tmp.path().join("point_w02_e02/solution.json").exists());
}

#[test]
fn tightened_verify_reports_failures_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"grid": {"ns": 10, "nmu": 5}, "tolerances": {"verify_scale": 0.001}}"#,
    );
    let o = magstar(&["verify", "--config", &cfg, "--out", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(5));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]")).count(), 12);
    assert!(stdout.contains("[FAIL]"));
    let report = json(&tmp.path().join("verify.json"));
    assert_eq!(report["all_pass"], Value::Bool(false));
    let failed: Vec<&str> = report["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == Value::Bool(false))
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(!failed.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains(failed[0]));
}
