use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const EXAMPLE: &str = r#"{
  "version": 1,
  "c": 5,
  "goods": ["g1", "g2", "g3", "g4", "g5", "g6"],
  "agents": [
    {"name": "low", "matroid": {"type": "uniform", "cap": 0}},
    {"name": "high", "matroid": {"type": "marked", "goods": ["g1", "g2", "g3", "g4", "g5", "g6"]}}
  ]
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairswap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn solve_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "example.json", EXAMPLE);
    let lex = json(&run(&["solve", &inst, "--criterion", "leximin"]));
    assert_eq!(lex["sorted_utilities"], serde_json::json!([5, 5]));
    let mnw = json(&run(&["solve", &inst, "--criterion", "mnw"]));
    assert_eq!(mnw["utilities"], serde_json::json!([3, 15]));
    for key in ["bundles", "clean", "supplementary"] {
        assert!(mnw[key].is_object(), "{key}");
    }
}

#[test]
fn solve_pmean_with_trace_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "example.json", EXAMPLE);
    let trace = dir.path().join("trace.jsonl");
    let dot = dir.path().join("graph.dot");
    let out = json(&run(&[
        "solve",
        &inst,
        "--criterion",
        "pmean",
        "--p",
        "-1",
        "--trace",
        trace.to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
    ]));
    assert_eq!(out["criterion"], "pmean:-1");
    let lines = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(
        lines.lines().count() as u64,
        out["iterations"].as_u64().unwrap()
    );
    for line in lines.lines() {
        let record: Value = serde_json::from_str(line).unwrap();
        assert!(record.get("action").is_some());
    }
    assert!(std::fs::read_to_string(&dot)
        .unwrap()
        .starts_with("digraph"));
}

#[test]
fn non_divisible_pair_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = EXAMPLE.replace("\"c\": 5", "\"a\": 3, \"b\": 7");
    let inst = write(dir.path(), "bad.json", &text);
    let out = run(&["solve", &inst]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NP-hard"));
}

#[test]
fn rescaled_instance_reports_original_units() {
    let dir = tempfile::tempdir().unwrap();
    let text = EXAMPLE.replace("\"c\": 5", "\"a\": 2, \"b\": 10");
    let inst = write(dir.path(), "scaled.json", &text);
    let out = json(&run(&["solve", &inst, "--criterion", "mnw"]));
    assert_eq!(
        out["scale"]["original_utilities"],
        serde_json::json!([6, 30])
    );
}

#[test]
fn audit_solver_output_directly() {
    let dir = tempfile::tempdir().unwrap();
    let text = EXAMPLE
        .replace(
            "\"type\": \"uniform\", \"cap\": 0",
            "\"type\": \"uniform\", \"cap\": 2",
        )
        .replace("\"c\": 5", "\"c\": 3");
    let inst = write(dir.path(), "ef1.json", &text);
    let solved = run(&["solve", &inst, "--criterion", "mnw"]);
    let alloc = write(
        dir.path(),
        "alloc.json",
        &String::from_utf8_lossy(&solved.stdout),
    );
    let report = json(&run(&[
        "audit",
        &inst,
        &alloc,
        "--mms",
        "--criterion",
        "mnw",
        "--p",
        "-1",
    ]));
    assert_eq!(report["ef1"]["holds"], false);
    assert_eq!(report["ef1"]["witness"]["envious"], 0);
    assert_eq!(report["mms"]["violations"], serde_json::json!([]));
    assert!(report["mms"]["agents"][0]["ratio"].is_number());

    let table = run(&["audit", &inst, &alloc, "--table"]);
    assert!(table.status.success());
    assert!(String::from_utf8_lossy(&table.stdout).contains("EF1: no"));
}

#[test]
fn audit_single_agent_passes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "one.json",
        r#"{"version": 1, "c": 2, "goods": ["x", "y"],
            "agents": [{"name": "solo", "matroid": {"type": "uniform", "cap": 1}}]}"#,
    );
    let alloc = write(
        dir.path(),
        "a.json",
        r#"{"version": 1, "bundles": {"solo": ["x", "y"]}}"#,
    );
    let report = json(&run(&["audit", &inst, &alloc, "--mms"]));
    assert_eq!(report["ef1"]["holds"], true);
    assert_eq!(report["efx"]["holds"], true);
    assert_eq!(report["mms"]["agents"][0]["ratio"], 1.0);
}

#[test]
fn gen_is_byte_identical_and_solvable() {
    let a = run(&[
        "gen",
        "--family",
        "transversal",
        "--n",
        "3",
        "--m",
        "6",
        "--c",
        "3",
        "--seed",
        "42",
    ]);
    let b = run(&[
        "gen",
        "--family",
        "transversal",
        "--n",
        "3",
        "--m",
        "6",
        "--c",
        "3",
        "--seed",
        "42",
    ]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "gen.json", &String::from_utf8_lossy(&a.stdout));
    assert!(run(&["solve", &inst]).status.success());
}

#[test]
fn gen_marked_is_additive() {
    let out = json(&run(&[
        "gen", "--family", "marked", "--n", "2", "--m", "5", "--seed", "1",
    ]));
    for agent in out["agents"].as_array().unwrap() {
        assert_eq!(agent["matroid"]["type"], "marked");
    }
}

#[test]
fn oracle_check_passes_and_reports() {
    let out = run(&[
        "oracle-check",
        "--count",
        "20",
        "--max-m",
        "5",
        "--jobs",
        "2",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 mismatches"));
}

#[test]
fn unknown_field_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = EXAMPLE.replace("\"version\": 1,", "\"version\": 1, \"extra\": true,");
    let inst = write(dir.path(), "bad.json", &text);
    assert_eq!(run(&["solve", &inst]).status.code(), Some(2));
}

#[test]
fn pmean_without_exponent_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "example.json", EXAMPLE);
    assert_eq!(
        run(&["solve", &inst, "--criterion", "pmean"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["solve", &inst, "--criterion", "pmean", "--p", "1"])
            .status
            .code(),
        Some(2)
    );
}
