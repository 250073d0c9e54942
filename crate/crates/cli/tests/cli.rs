//! Exit codes and file handling of the `netex` binary.

use std::io::Write;
use std::process::{Command, Output, Stdio};

const SQRT_PAIR: &str = r#"{
  "version": 1,
  "actors": [
    {"id": "b1", "side": "A", "endowment": 1.0, "utility": {"family": "additive_power", "params": {"alpha": 0.5, "beta": 0.5, "c": 1.0}}},
    {"id": "s1", "side": "B", "endowment": 1.0, "utility": {"family": "additive_power", "params": {"alpha": 0.5, "beta": 0.5, "c": 1.0}}}
  ],
  "edges": [{"buyer": "b1", "seller": "s1", "capacity": 1.0}]
}"#;

fn netex(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_netex"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn validate_reports_counts_and_errors() {
    let ok = netex(&["validate"], SQRT_PAIR);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stderr(&ok).contains("2 actors"));

    let bad = netex(&["validate", "-"], &SQRT_PAIR.replace("\"alpha\": 0.5", "\"alpha\": 1.2"));
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("out of range"), "{}", stderr(&bad));

    let typo = netex(&["validate"], &SQRT_PAIR.replace("\"capacity\"", "\"capacty\""));
    assert_eq!(typo.status.code(), Some(2));
    assert!(stderr(&typo).contains("line 7"), "{}", stderr(&typo));
}

#[test]
fn missing_file_is_an_input_error() {
    let o = netex(&["solve", "/nonexistent/instance.json"], "");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_then_check_succeeds() {
    let solved = netex(&["solve"], SQRT_PAIR);
    assert_eq!(solved.status.code(), Some(0), "{}", stderr(&solved));
    let checked = netex(&["check"], &stdout(&solved));
    assert_eq!(checked.status.code(), Some(0));
    assert!(stderr(&checked).starts_with("Stable"));
}

#[test]
fn propose_side_flag_changes_the_outcome() {
    let seller = netex(&["solve", "--propose-side", "B"], SQRT_PAIR);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&seller)).unwrap();
    assert_eq!(doc["propose_side"], "B");
    assert!((doc["payoffs"]["s1"].as_f64().unwrap() - 0.732_051).abs() < 1e-5);
}

#[test]
fn null_trade_profile_is_unstable() {
    let solved = stdout(&netex(&["solve"], SQRT_PAIR));
    let mut doc: serde_json::Value = serde_json::from_str(&solved).unwrap();
    for s in doc["profile"].as_array_mut().unwrap() {
        s["give"] = 0.0.into();
        s["ask"] = 0.0.into();
    }
    let o = netex(&["check"], &doc.to_string());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("blocking_pair"), "{}", stderr(&o));
}

#[test]
fn check_detects_a_different_instance() {
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("other.json");
    std::fs::write(&other, SQRT_PAIR.replace("\"capacity\": 1.0", "\"capacity\": 0.9")).unwrap();
    let solved = stdout(&netex(&["solve"], SQRT_PAIR));
    let o = netex(&["check", "-", "--instance", other.to_str().unwrap()], &solved);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn iteration_cap_is_non_convergence() {
    let capped = SQRT_PAIR.replace(
        "\"edges\"",
        "\"solver\": {\"max_iterations\": 1, \"max_retries\": 1},\n  \"edges\"",
    );
    let two_buyers = capped.replace(
        "{\"id\": \"s1\"",
        "{\"id\": \"b2\", \"side\": \"A\", \"endowment\": 1.0, \"utility\": {\"family\": \"ces\", \"params\": {\"rho\": 0.5, \"w\": 0.5}}},\n    {\"id\": \"s1\"",
    );
    let two_buyers = two_buyers.replace(
        "[{\"buyer\": \"b1\", \"seller\": \"s1\", \"capacity\": 1.0}]",
        "[{\"buyer\": \"b1\", \"seller\": \"s1\", \"capacity\": 1.0}, {\"buyer\": \"b2\", \"seller\": \"s1\", \"capacity\": 1.0}]",
    );
    let o = netex(&["solve"], &two_buyers);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn out_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let o = netex(&["gen", "--seed", "5", "--buyers", "2", "--sellers", "2", "--out", path.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, stdout(&netex(&["gen", "--seed", "5", "--buyers", "2", "--sellers", "2"], "")));
    assert_ne!(text, stdout(&netex(&["gen", "--seed", "6", "--buyers", "2", "--sellers", "2"], "")));
    // Only the target file is left behind.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn frontier_exports_csv() {
    let o = netex(&["frontier", "--edge", "b1:s1", "--samples", "3"], SQRT_PAIR);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,u_i,u_j,m_i,m_j");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,0,0.73205"));

    let unknown = netex(&["frontier", "--edge", "b1:s9"], SQRT_PAIR);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn oracle_lists_outcomes() {
    let o = netex(&["oracle", "--grid", "0.1", "--limit", "3"], SQRT_PAIR);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["n_outcomes"], 11);
    assert_eq!(doc["outcomes"].as_array().unwrap().len(), 3);

    let bad = netex(&["oracle", "--grid", "0.3"], SQRT_PAIR);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(netex(&["frobnicate"], "").status.code(), Some(2));
    assert_eq!(netex(&["gen", "--density", "0"], "").status.code(), Some(2));
}
