use std::path::Path;
use std::process::{Command, Output};

use renyi_accounting::harness::{import, reconstruct};

fn acct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renyi-acct")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const RR_SCRIPT: &str = r#"{
  "mech": {"kind": "discrete", "outcomes": ["0", "1"], "p0": [0.75, 0.25], "p1": [0.25, 0.75]},
  "request": {"orders": [2.0, 4.0], "eps": [0.9, 1.1]},
  "children": {
    "1": {
      "mech": {"kind": "discrete", "outcomes": ["0", "1"], "p0": [0.75, 0.25], "p1": [0.25, 0.75]},
      "request": {"orders": [2.0, 4.0], "eps": [0.9, 1.1]},
      "children": {"0": "STOP"}
    }
  }
}"#;

const SCHEDULE: &str = r#"{"segments": [
  {"mechanism": {"kind": "gaussian", "sigma": 2.0, "sensitivity": 1.0}, "steps": 5},
  {"mechanism": {"kind": "gaussian", "sigma": 4.0, "sensitivity": 1.0}, "steps": 5}
]}"#;

#[test]
fn orders_and_convert() {
    let out = acct(&["orders", "--granularity", "10"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "[2.0,4.0,8.0,16.0,32.0,64.0,128.0]\n");

    let out = acct(&["orders"]);
    let set: Vec<f64> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(set.len(), 38);

    let out = acct(&["convert", "--curve", r#"{"orders":[2.0],"eps":[1.0]}"#, "--delta", "1e-5"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["epsilon"].as_f64().unwrap() - 12.512925464970228).abs() < 1e-12);

    let out = acct(&["convert", "--dp-target", "1.0", "--delta", "1e-5"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["status"], "ok");
}

#[test]
fn validation_errors_exit_1() {
    assert_eq!(acct(&["orders", "--granularity", "1"]).status.code(), Some(1));
    assert_eq!(acct(&["convert", "--curve", "{\"orders\":[2.0],\"eps\":[1.0]}", "--delta", "2"]).status.code(), Some(1));
    assert_eq!(acct(&["filter", "--script", "/nonexistent.json", "--cap", "1"]).status.code(), Some(1));
    assert_eq!(acct(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(acct(&["--help"]).status.code(), Some(0));
}

#[test]
fn filter_session_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let script = write(dir.path(), "script.json", RR_SCRIPT);
    let orders = write(dir.path(), "orders.json", r#"{"orders": [2.0, 4.0]}"#);
    let log = dir.path().join("filter.jsonl");
    let args = ["filter", "--script", &script, "--orders-file", &orders, "--cap", "1.5", "--seed", "3", "--world", "1"];

    let out = acct(&[&args[..], &["--out", log.to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read_to_string(&log).unwrap();
    assert!(first.starts_with(r#"{"mode":"filter""#));
    let again = acct(&args);
    assert_eq!(stdout(&again), first);

    reconstruct(&import(&log).unwrap()).unwrap();
    let out = acct(&["replay", "--log", log.to_str().unwrap()]);
    assert!(out.status.success());

    let csv = acct(&[&args[..], &["--format", "csv"]].concat());
    let text = stdout(&csv);
    assert!(text.starts_with("step,spent_a2,spent_a4,decision,eps_dp\n"));
    assert_eq!(text.lines().count(), first.lines().count());
}

#[test]
fn odometer_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let schedule = write(dir.path(), "schedule.json", SCHEDULE);
    let orders = write(dir.path(), "orders.json", "[2.0, 8.0]");
    let out = acct(&["odometer", "--schedule", &schedule, "--orders-file", &orders, "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("step,spent_a2,spent_a8,f,eps_dp\n"));
    assert_eq!(text.lines().count(), 11);

    let out = acct(&["replay", "--schedule", &schedule, "--orders-file", &orders]);
    let trace: Vec<serde_json::Value> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(trace.len(), 10);
    assert_eq!(trace[9]["eps"][0].as_f64().unwrap(), 5.0 * 0.25 + 5.0 * 0.0625);
}

#[test]
fn dp_target_filter_session() {
    let dir = tempfile::tempdir().unwrap();
    let schedule = write(dir.path(), "schedule.json", SCHEDULE);
    let out = acct(&["filter", "--schedule", &schedule, "--dp-target", "2.0", "--delta", "1e-6", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(log["header"]["dp_target"], 2.0);
    assert_eq!(log["events"].as_array().unwrap().len(), 10);
    assert_eq!(acct(&["filter", "--schedule", &schedule, "--dp-target", "2", "--cap", "1"]).status.code(), Some(1));
}

#[test]
fn policy_command() {
    let dir = tempfile::tempdir().unwrap();
    let policy = write(
        dir.path(),
        "policy.json",
        r#"{"knob": "noise", "cap": {"orders": [2.0, 8.0], "eps": [1000.0, 4000.0]}}"#,
    );
    let signal = write(dir.path(), "signal.json", "[true, 450.0, false, 12.5]");
    let base = write(dir.path(), "base.json", SCHEDULE);
    let out = acct(&["policy", "--policy", &policy, "--signal", &signal, "--base", &base]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let adjustments: Vec<&str> = trace["periods"].as_array().unwrap().iter().map(|p| p["adjustment"].as_str().unwrap()).collect();
    assert_eq!(adjustments, ["decrease", "decrease", "increase", "increase"]);
}

#[test]
fn oracle_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let script = write(dir.path(), "script.json", RR_SCRIPT);
    let out = acct(&["oracle", "filter", "--script", &script, "--cap", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["holds"], true);

    let out = acct(&["oracle", "odometer", "--script", &script, "--delta", "0.5", "--f", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    assert_eq!(acct(&["oracle", "gaussian", "--sigma", "2"]).status.code(), Some(0));
    // a tolerance no quadrature can meet is an assertion failure, not a usage error
    assert_eq!(acct(&["oracle", "gaussian", "--sigma", "0.5", "--tolerance", "0"]).status.code(), Some(2));
    assert_eq!(acct(&["oracle", "gaussian", "--sigma", "-1"]).status.code(), Some(1));
}
