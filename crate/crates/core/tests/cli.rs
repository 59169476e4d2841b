mod common;

use std::process::{Command, Output};

use common::fixture_path;

fn rvopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(name: &str) -> String {
    fixture_path(name).to_string_lossy().into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn merit_and_feasible() {
    let out = rvopt(&["merit", &path("e1.json"), "--at", "0.25", "1"]);
    assert!(out.status.success());
    assert!((json(&out)["phi"].as_f64().unwrap() - 0.25).abs() <= 1e-12);

    let out = rvopt(&["feasible", &path("e1.json"), "--at", "0", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["feasible"], false);
}

#[test]
fn report_is_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = rvopt(&[
            "--seed",
            "11",
            "report",
            &path("e2.json"),
            "--at",
            "-1",
            "0",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("consistent with necessary conditions"));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(report["seed"], 11);
}

#[test]
fn report_exit_codes() {
    let o = rvopt(&["report", &path("e2_open.json"), "--at", "-1", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(
        json(&o)["summary"]["headline"],
        "refuted: multiplier LP infeasible; dominating witness found"
    );
    let o = rvopt(&["report", &path("e2.json"), "--at", "-0.5", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(
        json(&o)["summary"]["headline"],
        "refuted: reference point is infeasible"
    );
}

#[test]
fn certify_and_regularity_commands() {
    let o = rvopt(&["certify", &path("e3.json"), "--at", "0.5", "1", "--skip-cq"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(&o)["qualification"].is_null());
    let o = rvopt(&[
        "increase",
        &path("e1.json"),
        "--at",
        "1",
        "0",
        "--alpha",
        "1.2",
        "--delta",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = rvopt(&[
        "errorbound",
        &path("e1.json"),
        "--at",
        "1",
        "0",
        "--sigma",
        "100",
        "--radius",
        "1.2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(json(&o)["witness"].is_array());
}

#[test]
fn scan_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let o = rvopt(&[
        "scan",
        &path("e3.json"),
        "--box",
        "0",
        "2",
        "0",
        "2",
        "--res",
        "5",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(json(&o)["nodes"], 25);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn solve_command() {
    let o = rvopt(&[
        "solve",
        &path("e3.json"),
        "--weights",
        "1",
        "1",
        "--start",
        "2",
        "2",
        "--ell",
        "4",
        "--sigma",
        "0.6",
    ]);
    assert!(o.status.success());
    let point = json(&o)["point"].clone();
    let x: Vec<f64> = serde_json::from_value(point).unwrap();
    assert!((x[0] - 0.5).abs() <= 0.05 || x[1].abs() <= 0.05);
}

#[test]
fn errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(fixture_path("e1.json")).unwrap();
    std::fs::write(&bad, text.replace(r#""k": {"kind": "orthant", "dim": 2},"#, "")).unwrap();
    let o = rvopt(&["merit", bad.to_str().unwrap(), "--at", "0", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k: required"));
    let o = rvopt(&["merit", &path("e1.json"), "--at", "0", "0", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = rvopt(&["--tol-scale", "-1", "merit", &path("e1.json"), "--at", "0", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
