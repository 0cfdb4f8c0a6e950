use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn emdarp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emdarp")).args(args).output().expect("run emdarp")
}

fn tiny() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny.json")
}

fn digest(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_tiny_serves_the_request_directly() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let out = emdarp(&["--format", "json", "solve", s(&tiny()), "--out", s(&plan)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["status"], "optimal");
    // pickup at 10 s, delivery at 10 + 2 + 10 = 22 s, depot at 22 + 2 + 10 = 34 s
    let expected = 34.0 + 1e-3 * (10.0 + 22.0);
    assert!((report["objective"].as_f64().unwrap() - expected).abs() < 1e-9);
    let nodes: Vec<u64> =
        report["plan"]["agents"][0]["visits"].as_array().unwrap().iter().map(|v| v["node"].as_u64().unwrap()).collect();
    // v0 | p0 | d0 | h0
    assert_eq!(nodes, [0, 1, 2, 3]);
    let text = emdarp(&["solve", s(&tiny())]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("[v0, p0, d0, h0]"));

    let check = emdarp(&["check", s(&tiny()), s(&plan)]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn check_flags_a_plan_below_the_soc_floor() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    assert!(emdarp(&["solve", s(&tiny()), "--out", s(&plan)]).status.success());
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    doc["agents"][0]["visits"][3]["soc"] = Value::from(0.1);
    std::fs::write(&plan, doc.to_string()).unwrap();

    let out = emdarp(&["--format", "json", "check", s(&tiny()), s(&plan)]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks: Vec<&str> =
        report["violations"].as_array().unwrap().iter().map(|v| v["check"].as_str().unwrap()).collect();
    assert!(checks.contains(&"soc-bounds"), "{checks:?}");
    let v = report["violations"].as_array().unwrap().iter().find(|v| v["check"] == "soc-bounds").unwrap();
    assert!((v["magnitude"].as_f64().unwrap() - 0.15).abs() < 1e-9);
}

#[test]
fn build_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.mps");
    let b = dir.path().join("b.mps");
    assert!(emdarp(&["build", s(&tiny()), "--out", s(&a)]).status.success());
    assert!(emdarp(&["build", s(&tiny()), "--out", s(&b)]).status.success());
    assert_eq!(digest(&a), digest(&b));
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("NAME tiny\n"));
    assert!(text.trim_end().ends_with("ENDATA"));
}

#[test]
fn gen_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<PathBuf> = ["a", "b", "c"].iter().map(|n| dir.path().join(format!("{n}.json"))).collect();
    for (p, seed) in paths.iter().zip(["7", "7", "8"]) {
        let out = emdarp(&["gen", "--seed", seed, "--requests", "3", "--preset", "highdischarge", "--out", s(p)]);
        assert!(out.status.success());
    }
    assert_eq!(digest(&paths[0]), digest(&paths[1]));
    assert_ne!(digest(&paths[0]), digest(&paths[2]));
    assert!(emdarp(&["validate", s(&paths[0])]).status.success());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(emdarp(&["validate", s(&missing)]).status.code(), Some(4));

    let bad = dir.path().join("bad.json");
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(tiny()).unwrap()).unwrap();
    doc["requests"][0]["tw_hi"] = Value::from(-1.0);
    std::fs::write(&bad, doc.to_string()).unwrap();
    let out = emdarp(&["validate", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("requests[0]"));

    // the only agent cannot finish in time and rejection is not allowed
    let infeasible = dir.path().join("infeasible.json");
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(tiny()).unwrap()).unwrap();
    doc["agents"][0]["max_duration"] = Value::from(5.0);
    doc["config"]["selective"] = Value::from(false);
    std::fs::write(&infeasible, doc.to_string()).unwrap();
    assert_eq!(emdarp(&["solve", s(&infeasible)]).status.code(), Some(2));
}

#[test]
fn node_limit_returns_the_incumbent_with_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("g.json");
    let plan = dir.path().join("plan.json");
    assert!(emdarp(&["gen", "--seed", "2", "--requests", "4", "--out", s(&inst)]).status.success());
    let out = emdarp(&["--format", "json", "solve", s(&inst), "--node-limit", "1", "--out", s(&plan)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["status"], "feasible");
    assert!(report["gap"].as_f64().unwrap() >= 0.0);
    assert!(plan.exists());
    assert_eq!(emdarp(&["check", s(&inst), s(&plan)]).status.code(), Some(0));
}

#[test]
fn plot_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let svg = dir.path().join("plan.svg");
    assert!(emdarp(&["solve", s(&tiny()), "--out", s(&plan)]).status.success());
    assert!(emdarp(&["plot", s(&tiny()), s(&plan), "--out", s(&svg)]).status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains("<svg"));
    // three arcs: v0 -> p0 -> d0 -> h0
    assert_eq!(text.matches("<line").count(), 3);
}
