//! End-to-end runs of the `esbgk` binary: exit codes, output formats,
//! schema conformance and byte-identical reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn esbgk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esbgk"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn docs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("output exists"))
        .expect("valid JSON")
}

fn assert_schema(schema: &str, doc: &Value) {
    let schema = read_json(&docs().join("schemas").join(schema));
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(doc) {
        Ok(()) => Vec::new(),
        Err(errors) => errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect(),
    };
    assert!(msgs.is_empty(), "schema violations: {msgs:#?}");
}

#[test]
fn relax_json_matches_schema_and_decays_at_the_guaranteed_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("relax.json");
    let run = esbgk(&[
        "relax",
        "--grid-n",
        "32",
        "--t-end",
        "2",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let doc = read_json(&out);
    assert_schema("relax.schema.json", &doc);
    let summary = &doc["summary"];
    assert_eq!(summary["bound_rate"].as_f64(), Some(3.0));
    assert!(summary["fitted_rate"].as_f64().unwrap() >= 3.0);
    assert_eq!(summary["clipped_mass"].as_f64(), Some(0.0));
    assert_eq!(doc["columns"].as_array().unwrap().len(), 19);
}

#[test]
fn relax_csv_writes_header_columns_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("relax.csv");
    let run = esbgk(&[
        "relax",
        "--grid-n",
        "16",
        "--t-end",
        "0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));

    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    let columns: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(columns[0], "t");
    assert!(columns.contains(&"entropy_balance_residual"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r.len() == columns.len()));
    assert!(text.lines().any(|l| l.starts_with("# kind = relax")));

    let summary = read_json(&dir.path().join("relax.summary.json"));
    assert_schema("summary.schema.json", &summary);
}

#[test]
fn equilibrium_start_produces_no_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eq.json");
    let run = esbgk(&[
        "relax",
        "--set",
        "init=equilibrium",
        "--grid-n",
        "24",
        "--t-end",
        "0.5",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let doc = read_json(&out);
    for row in doc["rows"].as_array().unwrap() {
        assert!(row["D_nu"].as_f64().unwrap().abs() <= 1e-8);
    }
}

#[test]
fn slab_and_linearized_outputs_match_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let slab = dir.path().join("slab.json");
    let run = esbgk(&[
        "slab",
        "--grid-n",
        "12",
        "--set",
        "cells=8",
        "--t-end",
        "0.2",
        "--dt",
        "0.02",
        "--format",
        "json",
        "--out",
        slab.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert_schema("slab.schema.json", &read_json(&slab));

    let lin = dir.path().join("lin.json");
    let run = esbgk(&[
        "linearized",
        "--grid-n",
        "12",
        "--set",
        "samples=5",
        "--format",
        "json",
        "--out",
        lin.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let doc = read_json(&lin);
    assert_schema("linearized.schema.json", &doc);
    assert_eq!(doc["summary"]["violations"].as_u64(), Some(0));
}

#[test]
fn certify_is_deterministic_and_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let mut reports = Vec::new();
    for _ in 0..2 {
        let run = esbgk(&[
            "certify",
            "--grid-n",
            "32",
            "--count",
            "3",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&run), 0, "{}", stderr(&run));
        assert!(String::from_utf8_lossy(&run.stdout).contains("total violations: 0"));
        reports.push(std::fs::read(&out).unwrap());
    }
    assert!(reports[0] == reports[1], "reruns differ");
    assert_schema("certify.schema.json", &read_json(&out));
}

#[test]
fn impossible_tolerance_exits_with_violation() {
    let run = esbgk(&[
        "certify", "--grid-n", "16", "--count", "1", "--tol", "1e-20",
    ]);
    assert_eq!(code(&run), 1);
    assert!(stderr(&run).contains("worst violation"));
    let doc: Value = serde_json::from_slice(&run.stdout).expect("JSON report on stdout");
    assert!(doc["violations"].as_u64().unwrap() > 0);
    assert!(doc["worst_violation"].is_object());
}

#[test]
fn empty_ensemble_warns_but_succeeds() {
    let run = esbgk(&["certify", "--grid-n", "16", "--count", "0"]);
    assert_eq!(code(&run), 0);
    assert!(stderr(&run).contains("vacuous"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scenario");
    std::fs::write(&bad, "kind = relax\nno_such_key = 1\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["relax", "--nu", "1.5"],
        vec!["relax", "--dt", "1"],
        vec!["slab", "--dt", "5"],
        vec!["relax", "--no-such-flag"],
        vec!["relax", "--scenario", "/nonexistent/file.scenario"],
        vec!["relax", "--scenario", bad.to_str().unwrap()],
        vec![
            "relax",
            "--grid-n",
            "8",
            "--t-end",
            "0.01",
            "--out",
            "/nonexistent/dir/out.csv",
        ],
        vec!["frobnicate"],
    ];
    for args in cases {
        let run = esbgk(&args);
        assert_eq!(code(&run), 2, "{args:?}: {}", stderr(&run));
    }
}

#[test]
fn numerical_failure_exits_with_three() {
    let run = esbgk(&[
        "relax",
        "--grid-n",
        "4",
        "--vmax",
        "1.0",
        "--correction",
        "on",
        "--t-end",
        "0.1",
    ]);
    assert_eq!(code(&run), 3, "{}", stderr(&run));
}

#[test]
fn shipped_scenarios_parse_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let scenario = docs().join("scenarios/relax_anisotropic.scenario");
    let run = esbgk(&[
        "relax",
        "--scenario",
        scenario.to_str().unwrap(),
        "--grid-n",
        "16",
        "--t-end",
        "0.1",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let doc = read_json(&out);
    let solver = &doc["header"]["scenario"]["solver"];
    assert_eq!(solver["nu"].as_f64(), Some(-0.25));
    assert_eq!(solver["t_end"].as_f64(), Some(0.1));
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(code(&esbgk(&["--help"])), 0);
    assert_eq!(code(&esbgk(&["--version"])), 0);
    assert_eq!(code(&esbgk(&["certify", "--help"])), 0);
}
