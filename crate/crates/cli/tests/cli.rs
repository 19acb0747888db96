use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn ris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris")).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = ris(args);
    assert!(out.status.success(), "ris {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

/// Write a modified copy of a bundled config.
fn patched(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(bundled(name)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join(name);
    fs::write(&path, v.to_string()).unwrap();
    path
}

#[test]
fn solve_play_is_energetic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("solve");
    run_ok(&["solve", "--config", bundled("play.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let r = report(&out);
    assert_eq!(r["classification"]["label"], "Energetic");
    let csv = fs::read_to_string(out.join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,u_1,E,DE_1,psi0star_w,step_residual");
    assert_eq!(lines.count(), 10001);
    // u(1) close to the play output max(0, 2t − 1)
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!((last[1] - 1.0).abs() < 5e-3);
}

#[test]
fn sweep_double_well_reports_the_fold_jump() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    run_ok(&["sweep", "--config", bundled("double_well.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let csv = fs::read_to_string(out.join("jumps.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "t,u_minus_1,u_plus_1");
    assert_eq!(rows.len(), 2);
    let cells: Vec<f64> = rows[1].split(',').map(|c| c.parse().unwrap()).collect();
    let fold = 1.0 + 2.0 / (27f64).sqrt();
    assert!((cells[0] - fold).abs() < 1e-2, "jump loading {}", cells[0]);
    assert!(cells[1] < 0.0);
    assert!((cells[2] - 2.0 / 3f64.sqrt()).abs() < 1e-2, "landing {}", cells[2]);
    let r = report(&out);
    assert!(r["bv_balance"].as_f64().unwrap() < 1e-2);
    assert_eq!(r["jump_conditions"][0]["passed"], true);
    assert_eq!(r["limit_jumps"][0]["transition"]["passed"], true);
    for k in 0..7 {
        assert!(out.join(format!("level_{k:02}.csv")).exists());
    }
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = bundled("double_well.json");
    let dirs: Vec<PathBuf> = ["1", "4"]
        .iter()
        .map(|threads| {
            let out = tmp.path().join(format!("t{threads}"));
            run_ok(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads]);
            out
        })
        .collect();
    let manifest = fs::read_to_string(dirs[0].join("MANIFEST")).unwrap();
    assert!(manifest.contains("input double_well.json sha256:"));
    assert_eq!(manifest, fs::read_to_string(dirs[1].join("MANIFEST")).unwrap());
    for name in ["jumps.csv", "limit.csv", "report.json", "level_06.csv"] {
        assert_eq!(fs::read(dirs[0].join(name)).unwrap(), fs::read(dirs[1].join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn decreasing_ratio_schedule_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = patched(tmp.path(), "double_well.json", |v| {
        v["schedule"]["tau_rule"] = serde_json::json!({"kind": "explicit", "tau": [1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3]});
    });
    let out = ris(&["sweep", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schedule.tau_rule"));
}

#[test]
fn malformed_configs_exit_2_with_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = patched(tmp.path(), "play.json", |v| v["grid"]["tau"] = Value::String("small".into()));
    let out = ris(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.tau"));

    let play = bundled("play.json");
    let out = ris(&["solve", "--config", play.to_str().unwrap(), "--tol-override", "balance=-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerances.balance"));
}

#[test]
fn numerical_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    // the post-jump minimizer lies outside this box
    let cfg = patched(tmp.path(), "double_well.json", |v| {
        v["box"] = serde_json::json!({"lower": [-1.5], "upper": [0.5], "cells": 200});
    });
    let out = ris(&["solve", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn jump_and_param_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = bundled("double_well.json");
    let cfg = cfg.to_str().unwrap();
    let p = |s: &str| tmp.path().join(s);

    run_ok(&["jump", "--config", cfg, "--out", p("jump").to_str().unwrap()]);
    assert_eq!(report(&p("jump"))["verification"]["passed"], true);
    let header = fs::read_to_string(p("jump/path.csv")).unwrap();
    assert!(header.starts_with("r,theta_1,w_1,label,segment_cost\n"));

    run_ok(&["sweep", "--config", cfg, "--out", p("sweep").to_str().unwrap()]);
    let limit = p("sweep/limit.csv");
    run_ok(&["verify", "--config", cfg, "--curve", limit.to_str().unwrap(), "--out", p("verify").to_str().unwrap()]);
    assert_eq!(report(&p("verify"))["label"], "BV");

    run_ok(&["param", "--direction", "bv-to-param", "--config", cfg, "--curve", limit.to_str().unwrap(), "--out", p("p").to_str().unwrap()]);
    let r = report(&p("p"));
    assert!(r["residuals"]["energy_identity"].as_f64().unwrap() <= 1e-3);
    let param = p("p/param.csv");
    assert!(fs::read_to_string(&param).unwrap().starts_with("s,t,u_1,tdot,norm_defect\n"));
    run_ok(&["param", "--direction", "param-to-bv", "--config", cfg, "--curve", param.to_str().unwrap(), "--out", p("b").to_str().unwrap()]);
    let u = |path: PathBuf| -> Vec<String> {
        fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').take(2).collect::<Vec<_>>().join(",")).collect()
    };
    assert_eq!(u(limit), u(p("b/curve.csv")));
}

#[test]
fn contact_table_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    run_ok(&["contact", "--config", bundled("play.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let csv = fs::read_to_string(out.join("contact.csv")).unwrap();
    assert!(csv.starts_with("v_1,w_1,p,eps_lo,eps_hi,class\n"));
    assert_eq!(csv.lines().count(), 13);
    assert_eq!(report(&out)["rows"], 12);
}
