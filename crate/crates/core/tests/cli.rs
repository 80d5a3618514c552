use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ns-carleman")).args(args).output().unwrap()
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn list_prints_nine_experiments() {
    let o = bin(&["list"]);
    assert!(o.status.success());
    let v = json_of(&o);
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names.len(), 9);
    assert!(names.contains(&"obstruction_demo") && names.contains(&"continuation_sweep"));
}

#[test]
fn validate_empty_config_applies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, "{}").unwrap();
    let o = bin(&["validate", "continuation_sweep", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let v = json_of(&o);
    assert_eq!(v["valid"], true);
    assert_eq!(v["config"]["seeds"], serde_json::json!([1, 2, 3]));
    assert_eq!(v["config"]["sigmas"].as_array().unwrap().len(), 4);
}

#[test]
fn validate_reports_unordered_sigmas_and_unknown_keys() {
    let o = bin(&["validate", "inverse_source_i", "--set", "sigmas=[1e-4,1e-3]"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(json_of(&o)["error"].as_str().unwrap().contains("strictly decreasing"));
    let o = bin(&["validate", "inverse_source_i", "--set", "sigma=1", "--set", "lamda=2"]);
    let e = json_of(&o)["error"].as_str().unwrap().to_string();
    assert!(e.contains("sigma") && e.contains("lamda"), "{e}");
}

#[test]
fn run_rejects_bad_config_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["run", "obstruction_demo", "--set", "cells=2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cells"));
    let o = bin(&["run", "no_such_experiment"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn obstruction_demo_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = bin(&["run", "obstruction_demo", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let s = summary(a.path());
    assert_eq!(s["results"]["datasets_identical"], true);
    assert!(s["results"]["recovered_rot_F_norm"].as_f64().unwrap() <= 1e-8);
    assert!(s["anchor"].is_string());
    for f in ["obstruction.csv", "summary.json", "config.json", "MANIFEST"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    let manifest = fs::read_to_string(a.path().join("MANIFEST")).unwrap();
    assert!(manifest.contains(s["config_hash"].as_str().unwrap()));
}

#[test]
fn carleman_thm1_writes_eight_s_rows() {
    let d = tempfile::tempdir().unwrap();
    let o = bin(&["run", "carleman_thm1", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(d.path().join("vorticity_velocity.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    for col in ["s", "lhs_dt_rot_v", "lhs_v", "rhs_rot_F", "rhs_bdry_rot_v", "rhs_end_grad_rot_v", "rho"] {
        assert!(header.iter().any(|h| h == col), "missing {col}");
    }
    assert_eq!(r.records().count(), 8);
}

#[test]
fn soft_flags_give_exit_two() {
    // the H^-1 plateau check is flagged on the default input
    let d = tempfile::tempdir().unwrap();
    let o = bin(&["run", "carleman_lemmas", "--set", "cells=24", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(d.path())["status"], 2);
}
