use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const TOY: &str = r#"{
  "name": "toy", "reference_bus": "A",
  "buses": [{"id": "A", "demand_mw": 0}, {"id": "B", "demand_mw": 50}],
  "branches": [{"id": "AB", "from": "A", "to": "B", "susceptance": 10,
                "flow_limit_mw": 100, "attackable": true, "in_service": true}],
  "generators": [{"id": "G", "bus": "A", "p_max_mw": 100, "ict_controlled": false}]
}"#;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_griddefense")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn enumerate_toy_gives_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(dir.path(), "toy.json", TOY);
    let out = ok(&["enumerate", "--grid", grid.to_str().unwrap(), "--zmax", "1"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 1);
    assert_eq!(v["records"][0]["components"]["branches"][0], "AB");
    assert_eq!(v["records"][0]["lost_load_mw"], 50.0);
}

#[test]
fn enumerate_ieee9_unbounded_and_capped() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.json");
    let capped = dir.path().join("capped.json");
    let grid = data("ieee9.json");
    ok(&["enumerate", "--grid", &grid, "--zmax", "2", "--max-scenarios", "unbounded", "--out", full.to_str().unwrap()]);
    ok(&["enumerate", "--grid", &grid, "--zmax", "2", "--max-scenarios", "10", "--out", capped.to_str().unwrap()]);
    let full = json(&full);
    assert_eq!(full["records"].as_array().unwrap().len(), 55);
    assert_eq!(full["complete"], true);
    let capped = json(&capped);
    assert_eq!(capped["records"].as_array().unwrap().len(), 10);
    assert_eq!(capped["complete"], false);
}

#[test]
fn dump_dispatch_writes_the_worst_case() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(dir.path(), "toy.json", TOY);
    let dump = dir.path().join("dispatch.json");
    ok(&["enumerate", "--grid", grid.to_str().unwrap(), "--zmax", "1", "--dump-dispatch", dump.to_str().unwrap()]);
    let v = json(&dump);
    assert_eq!(v["dispatch"]["lost_load_mw"], 50.0);
    assert_eq!(v["attack"]["branches"][0], "AB");
}

#[test]
fn protect_budget_zero_avoids_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cas = dir.path().join("cas.json");
    ok(&["enumerate", "--grid", &data("ieee9.json"), "--zmax", "2", "--out", cas.to_str().unwrap()]);
    let out = ok(&["protect", "--cas", cas.to_str().unwrap(), "--budgets", "0", "--format", "csv", "--no-timings"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "x_max,avoided_lost_load_pct,excluded_cas_count,consecutive_excluded,remaining_worst_case_mw,runtime_s"
    );
    assert_eq!(lines[1], "0,0,0,0,125,0");
}

#[test]
fn protect_writes_report_and_plans() {
    let dir = tempfile::tempdir().unwrap();
    let cas = dir.path().join("cas.json");
    let out = dir.path().join("out");
    ok(&["enumerate", "--grid", &data("ieee9.json"), "--zmax", "2", "--max-scenarios", "unbounded", "--out", cas.to_str().unwrap()]);
    ok(&["protect", "--cas", cas.to_str().unwrap(), "--budgets", "1..5", "--alternatives", "2", "--out", out.to_str().unwrap()]);
    let report = json(&out.join("report.json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(report["baseline_lost_load_mw"], 125.0);
    assert_eq!(std::fs::read_to_string(out.join("report.csv")).unwrap().lines().count(), 6);
    let plans = json(&out.join("plans.json"));
    assert_eq!(plans[1]["budget"], 2);
    assert_eq!(plans[1]["remaining_worst_case_mw"], 90.0);
    assert!(plans[1]["alternatives"].as_array().unwrap().len() <= 2);

    let oracle = ok(&["oracle", "--grid", &data("ieee9.json"), "--xmax", "2", "--zmax", "2"]);
    let oracle: Value = serde_json::from_str(&oracle).unwrap();
    assert_eq!(oracle["worst_case_lost_load_mw"], plans[1]["remaining_worst_case_mw"]);
}

#[test]
fn protect_merges_configurations() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("open.json"), dir.path().join("closed.json"));
    for (cfg, out) in [("configs/cigre_switches_open.json", &a), ("configs/cigre_switches_closed.json", &b)] {
        ok(&["enumerate", "--grid", &data("cigre_mv.json"), "--config", &data(cfg), "--zmax", "2", "--max-scenarios", "50", "--out", out.to_str().unwrap()]);
    }
    let out = ok(&["protect", "--cas", a.to_str().unwrap(), "--cas", b.to_str().unwrap(), "--budgets", "1"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let labels: Vec<&str> = v["configuration_labels"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert_eq!(labels, ["switches-closed", "switches-open"]);
    assert!(v["identified_cas"].as_u64().unwrap() >= 50);
}

#[test]
fn merge_rejects_different_attack_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("z1.json"), dir.path().join("z2.json"));
    ok(&["enumerate", "--grid", &data("ieee9.json"), "--zmax", "1", "--out", a.to_str().unwrap()]);
    ok(&["enumerate", "--grid", &data("ieee9.json"), "--zmax", "2", "--out", b.to_str().unwrap()]);
    let out = run(&["protect", "--cas", a.to_str().unwrap(), "--cas", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_on_toy_and_guard() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(dir.path(), "toy.json", TOY);
    let v: Value = serde_json::from_str(&ok(&["oracle", "--grid", grid.to_str().unwrap(), "--xmax", "1", "--zmax", "1"])).unwrap();
    assert_eq!(v["protected"]["branches"][0], "AB");
    assert_eq!(v["worst_case_lost_load_mw"], 0.0);

    let out = run(&["oracle", "--grid", &data("ieee30.json"), "--xmax", "5", "--zmax", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("guard"));
}

#[test]
fn invalid_grid_names_the_offender() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &TOY.replace(r#""to": "B""#, r#""to": "Z""#));
    let out = run(&["validate", "--grid", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("AB"));

    let broken = write(dir.path(), "broken.json", "{\n  \"name\": ");
    let out = run(&["enumerate", "--grid", broken.to_str().unwrap(), "--zmax", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn validate_reports_each_configuration() {
    let out = ok(&[
        "validate",
        "--grid",
        &data("cigre_mv.json"),
        "--config",
        &data("configs/cigre_switches_open.json"),
        "--config",
        &data("configs/cigre_switches_closed.json"),
    ]);
    assert_eq!(out.lines().count(), 2);
    assert!(out.contains("27 attackable"));
    assert!(out.contains("30 attackable"));
}

#[test]
fn bad_arguments_are_input_errors() {
    for args in [
        vec!["protect", "--cas", "x.json", "--budgets", "3..1"],
        vec!["enumerate", "--grid", "x.json", "--zmax", "2", "--max-scenarios", "lots"],
        vec!["enumerate", "--grid", "/nonexistent.json", "--zmax", "1"],
        vec!["--jobs", "0", "validate", "--grid", "x.json"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
}
