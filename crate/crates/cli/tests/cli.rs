use std::path::Path;
use std::process::{Command, Output};

use chainlls::json::skeleton_from_json;
use chainlls::verify::verify;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chainlls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn check_worked_instance_passes() {
    let o = run(&["check", "7", "3", "16", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("case SmallA"));
    assert!(out.contains("rho 20"));
    assert!(out.contains("ledger total 20 = rho 20"));
    assert!(out.contains("(***) holds: 7−2·3 = 1 ≥ 1"));
}

#[test]
fn check_reports_failed_hypothesis() {
    let o = run(&["check", "8", "3", "16", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("(***) fails: 8−2·4 = 0 < 1"));
    assert!(stderr(&o).contains("(***) fails: 8−2·4 = 0 < 1"));
}

#[test]
fn check_rejects_k_at_most_r() {
    let o = run(&["check", "2", "2", "6", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k ≤ r regime not covered"));
}

#[test]
fn check_rejects_invalid_tuple() {
    let o = run(&["check", "1", "2", "6", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("genus"));
}

#[test]
fn check_json_is_canonical_and_integral() {
    let o = run(&["check", "7", "3", "16", "5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["rho"], 20);
    assert_eq!(v["audit"]["ledger_total"], 20);
    assert_eq!(v["passed"], true);
    fn no_floats(v: &Value) -> bool {
        match v {
            Value::Number(n) => n.is_i64() || n.is_u64(),
            Value::Array(a) => a.iter().all(no_floats),
            Value::Object(m) => m.values().all(no_floats),
            _ => true,
        }
    }
    assert!(no_floats(&v));
    let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    // Deterministic output.
    assert_eq!(
        stdout(&run(&["check", "7", "3", "16", "5", "--format", "json"])),
        text
    );
}

#[test]
fn check_json_on_failed_hypothesis() {
    let o = run(&["check", "8", "3", "16", "5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], 1);
    assert!(v["error"].as_str().unwrap().contains("(***) fails"));
}

#[test]
fn dump_then_verify_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let p = path.to_str().unwrap();
    let o = run(&["dump", "7", "3", "16", "5", "--out", p]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"b\": 5"));
    assert!(text.contains("\"schema\": 1"));
    let s = skeleton_from_json(&text).unwrap();
    assert_eq!(s.chain.components, 7);
    assert_eq!(s.tables.len(), 7);

    let from_file = run(&["verify-file", p, "--format", "json"]);
    assert_eq!(from_file.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    assert_eq!(v["verification"], serde_json::to_value(verify(&s)).unwrap());

    // Dumping again gives identical bytes.
    let again = dir.path().join("t.json");
    run(&[
        "dump",
        "7",
        "3",
        "16",
        "5",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn timestamps_stay_outside_the_skeleton() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("a.json");
    let stamped = dir.path().join("b.json");
    run(&["dump", "5", "2", "9", "3", "--out", plain.to_str().unwrap()]);
    let o = run(&[
        "dump",
        "5",
        "2",
        "9",
        "3",
        "--timestamps",
        "--out",
        stamped.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let a: Value = serde_json::from_str(&std::fs::read_to_string(&plain).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&std::fs::read_to_string(&stamped).unwrap()).unwrap();
    assert!(a.get("metadata").is_none());
    assert!(b["metadata"]["generated_at_unix"].is_string());
    assert_eq!(a["skeleton"], b["skeleton"]);
    assert_eq!(
        run(&["verify-file", stamped.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn dump_to_unwritable_path_names_it() {
    let o = run(&[
        "dump",
        "7",
        "3",
        "16",
        "5",
        "--out",
        "/nonexistent-dir/x.json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent-dir/x.json"));
}

#[test]
fn dump_of_uncovered_tuple_fails() {
    let o = run(&["dump", "8", "3", "16", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_file_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    run(&["dump", "7", "3", "16", "5", "--out", path.to_str().unwrap()]);
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replace("\"b\": 5", "\"b\": 6");
    std::fs::write(&path, text).unwrap();
    let o = run(&["verify-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("degree_balance         FAIL"));
}

#[test]
fn verify_file_rejects_missing_and_wrong_schema() {
    let o = run(&["verify-file", "/nonexistent-dir/s.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent-dir/s.json"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    run(&["dump", "4", "1", "5", "2", "--out", path.to_str().unwrap()]);
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replace("\"schema\": 1", "\"schema\": 9");
    std::fs::write(&path, text).unwrap();
    let o = run(&["verify-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("schema"));
}

#[test]
fn sweep_small_range() {
    let o = run(&["sweep", "--g", "2..4", "--r", "1..2", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<_> = out.lines().collect();
    assert!(lines[0].starts_with("g=2 r=1 d=0 k=2"));
    let summary = lines.last().unwrap();
    assert!(summary.starts_with("tried "), "{summary}");
    assert!(summary.contains("failures 0"));
    assert_eq!(
        lines.len() - 1,
        summary
            .split_whitespace()
            .nth(1)
            .unwrap()
            .parse::<usize>()
            .unwrap()
    );
}

#[test]
fn sweep_output_does_not_depend_on_jobs() {
    let one = run(&[
        "sweep", "--g", "2..6", "--r", "1..3", "--format", "json", "--jobs", "1",
    ]);
    let four = run(&[
        "sweep", "--g", "2..6", "--r", "1..3", "--format", "json", "--jobs", "4",
    ]);
    assert_eq!(one.stdout, four.stdout);
    for line in stdout(&one).lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema"], 1);
    }
}

#[test]
fn sweep_empty_range() {
    let o = run(&["sweep", "--g", "5..4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o).trim(),
        "tried 0 / hypothesis-satisfied 0 / constructed 0 / verified 0 / ledger-matched 0 / failures 0"
    );
}

#[test]
fn sweep_fail_fast_stops_at_injected_corruption() {
    let args = [
        "sweep",
        "--g",
        "2..5",
        "--r",
        "1..2",
        "--inject-corruption",
        "3,2,9,3",
    ];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1));
    let full = stdout(&o);
    assert!(full.contains("g=3 r=2 d=9 k=3 LargeSections"), "{full}");
    assert!(full.lines().last().unwrap().contains("failures 1"));

    let mut ff = args.to_vec();
    ff.push("--fail-fast");
    let o = run(&ff);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let lines: Vec<_> = out.lines().collect();
    assert!(lines[lines.len() - 2].starts_with("g=3 r=2 d=9 k=3"));
    assert!(lines[lines.len() - 2].contains("FAIL"));
    assert!(lines.last().unwrap().contains("stopped at first failure"));
    assert!(lines.len() < full.lines().count());
}

#[test]
fn sweep_case_filter_and_oracle() {
    let o = run(&[
        "sweep", "--g", "2..8", "--r", "2..3", "--case", "SmallB", "--oracle",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let body: Vec<_> = out.lines().filter(|l| l.starts_with("g=")).collect();
    assert!(!body.is_empty());
    assert!(body.iter().all(|l| l.contains(" SmallB ")));
    assert!(body
        .iter()
        .filter(|l| l.ends_with(" ok"))
        .all(|l| l.contains("oracle=agree")));
}

#[test]
fn sweep_out_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.txt");
    let o = run(&[
        "sweep",
        "--g",
        "2..3",
        "--r",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(Path::new(&path)).unwrap();
    assert!(text.lines().last().unwrap().starts_with("tried "));
}
