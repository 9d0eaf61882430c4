//! End-to-end checks of the `polarlab` binary: report schema, exit codes,
//! configuration files, and byte-identical reruns.

use std::process::{Command, Output};

use serde_json::Value;

fn polarlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polarlab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn eval_report_has_the_documented_shape() {
    let out = polarlab(&["eval", "--k", "6", "--m", "0", "--center", "2i", "--z", "0.1+1.1i", "--max-shell", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["command"], "eval");
    assert_eq!(v["params"]["k"], 6);
    assert_eq!(v["params"]["center"]["y"].as_f64(), Some(2.0));
    assert!(v["runtime_ms"].is_u64());
    let rows = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    for key in ["name", "lhs", "rhs", "abs_diff", "rel_diff", "pass"] {
        assert!(row.get(key).is_some(), "missing {key}");
    }
    let lhs = row["lhs"].as_array().unwrap();
    assert_eq!(lhs.len(), 2);
    assert!(lhs[0].as_f64().unwrap().is_finite());
    // value rows carry no reference
    assert!(row["rhs"][0].is_null());
    assert!(v["diagnostics"]["term_magnitude"].as_f64().unwrap() > 0.0);
}

#[test]
fn reruns_are_byte_identical_without_timing() {
    let args = ["verify", "--suite", "lemma-xidelliptic", "--no-timing"];
    let a = polarlab(&args);
    let b = polarlab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["runtime_ms"], 0);
}

#[test]
fn csv_has_one_line_per_row() {
    let out = polarlab(&["expand", "--k", "2", "--m", "1", "--center", "2i", "--max-shell", "6", "--lo", "0", "--hi", "2", "--output", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "name,lhs_re,lhs_im,rhs_re,rhs_im,abs_diff,rel_diff,pass");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("c(0),"));
}

#[test]
fn config_file_overrides_flags_and_out_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let report = dir.path().join("report.json");
    std::fs::write(&cfg, "# shallow run\nmax_shell = 3\nno_timing = true\n").unwrap();
    let out = polarlab(&[
        "eval",
        "--z",
        "0.2+1.4i",
        "--max-shell",
        "30",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["params"]["max_shell"], 3);
    assert_eq!(v["runtime_ms"], 0);
}

#[test]
fn bad_input_exits_with_configuration_status() {
    assert_eq!(polarlab(&["eval", "--z", "0.5"]).status.code(), Some(2));
    assert_eq!(polarlab(&["eval", "--z", "i", "--k", "0"]).status.code(), Some(2));
    assert_eq!(polarlab(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
    assert_eq!(polarlab(&["eval", "--z", "i", "--config", "/nonexistent/run.cfg"]).status.code(), Some(2));
}

#[test]
fn evaluating_on_a_pole_trips_the_numerical_guard() {
    let out = polarlab(&["eval", "--m", "-1", "--center", "0.3+1.2i", "--z", "0.3+1.2i"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failing_checks_exit_with_status_one() {
    // two nodes per panel cannot resolve the pairing to one percent
    let out = polarlab(&["verify", "--suite", "petersson-coeff", "--grid", "2", "--y-max", "2", "--max-shell", "1", "--no-timing"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert!(v["results"].as_array().unwrap().iter().any(|r| r["pass"] == false));
}
