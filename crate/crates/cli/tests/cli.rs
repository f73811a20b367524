//! End-to-end checks of the binary: spec'd exit codes, header blocks, and
//! agreement with the library's own numbers.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::str::FromStr;

use hardcore::ensemble::{Activity, Boundary, Ensemble};
use hardcore::lattice::Torus;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardcore"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

fn temp_file(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("hardcore-cli-{}-{name}", std::process::id()));
    path
}

#[test]
fn the_exact_subcommand_matches_the_library() {
    let doc = stdout_json(&run(&[
        "exact", "--d", "2", "--m", "2", "--lambda", "1", "--v0", "(1,0)", "--boundary", "even",
    ]));
    let e = Ensemble::new(Torus::new(2, 2).unwrap(), Boundary::Even);
    let v0 = e.torus().vertex(&[1, 0]).unwrap();
    let p = e
        .occupation_probability(&Activity::from_str("1").unwrap(), v0)
        .unwrap();
    let row = &doc["rows"][0];
    assert_eq!(row["p_num"], p.numer().to_string());
    assert_eq!(row["p_den"], p.denom().to_string());
    assert_eq!(row["lambda"], "1");
    assert_eq!(doc["config"]["boundary"], "even");
    assert!(doc["config_hash"].as_str().unwrap().starts_with("0x"));
}

#[test]
fn forced_large_flow_audits_exit_cleanly() {
    let vacuous = stdout_json(&run(&["flow-audit", "--force-large", "true"]));
    assert_eq!(vacuous["summary"][0]["source_count"], 0);
    assert_eq!(vacuous["summary"][0]["telescoping_holds"], true);

    let doc = stdout_json(&run(&[
        "flow-audit", "--m", "3", "--force-large", "true", "--lambda", "2",
    ]));
    let summary = &doc["summary"][0];
    assert!(summary["source_count"].as_u64().unwrap() > 0);
    assert_eq!(summary["small_count"], 0);
    assert_eq!(summary["telescoping_holds"], true);
    assert!(!doc["rows"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_with_code_two() {
    let bad_key = temp_file("bad-key.json");
    std::fs::write(&bad_key, r#"{"lambda": ["1"], "bogus": 3}"#).unwrap();
    let output = run(&["exact", "--config", bad_key.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    std::fs::remove_file(&bad_key).ok();

    let mismatch = temp_file("mismatch.json");
    std::fs::write(&mismatch, r#"{"subcommand": "exact"}"#).unwrap();
    let output = run(&["sample", "--config", mismatch.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    std::fs::remove_file(&mismatch).ok();

    let output = run(&["sample", "--lambda", "1/2"]);
    assert_eq!(output.status.code(), Some(2));

    let output = run(&["exact", "--lambda", "0.5"]);
    assert_eq!(output.status.code(), Some(2));

    let output = run(&["exact", "--no-such-flag"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn csv_outputs_carry_the_header_block() {
    let path = temp_file("iso.csv");
    let output = run(&[
        "iso", "--d", "2", "--q-max", "2", "--r-max", "1", "--tq", "20,19",
        "--output", path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(text.starts_with("# command: iso\n"));
    assert!(text.contains("# config: {"));
    assert!(text.contains("# config_hash: 0x"));
    assert!(text.contains("# table: stratified"));
    assert!(text.contains("# table: balls"));
    assert!(text.contains("# table: tq"));
    assert!(text.contains("d,q,t,s_qt"));
    // s(2, 2, 1) = 4 points at l1 norm 2 on one axis.
    assert!(text.contains("2,2,1,4"));
}

#[test]
fn flags_override_the_config_file() {
    let path = temp_file("base.json");
    std::fs::write(&path, r#"{"d": 2, "M": 2, "lambda": ["1"], "seed": 9}"#).unwrap();
    let doc = stdout_json(&run(&[
        "exact", "--config", path.to_str().unwrap(), "--lambda", "2",
    ]));
    std::fs::remove_file(&path).ok();
    assert_eq!(doc["config"]["lambda"][0], "2");
    assert_eq!(doc["config"]["seed"], 9);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn contour_audits_enumerate_the_cut_event() {
    let vacuous = stdout_json(&run(&["contour-audit"]));
    assert_eq!(vacuous["summary"][0]["instances"], 0);

    let doc = stdout_json(&run(&["contour-audit", "--m", "3"]));
    let summary = &doc["summary"][0];
    assert_eq!(summary["instances"], 944);
    assert_eq!(summary["violations"], 0);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 944);
    assert_eq!(doc["rows"][0]["all_hold"], true);
}

#[test]
fn approx_audits_deduplicate_island_shapes() {
    let doc = stdout_json(&run(&["approx-audit", "--m", "3"]));
    let summary = &doc["summary"][0];
    assert_eq!(summary["configurations"], 944);
    assert_eq!(summary["distinct_pairs"], 8);
    assert_eq!(summary["violations"], 0);
    for row in doc["rows"].as_array().unwrap() {
        assert_eq!(row["brackets"], true);
        assert_eq!(row["saturated"], true);
        assert_eq!(row["six_clustered"], true);
    }
}

#[test]
fn gap_scans_report_both_boundaries() {
    let doc = stdout_json(&run(&[
        "sample", "--gap", "true", "--lambda", "0.5,5", "--v0", "0,0",
        "--sweeps", "3000", "--burn-in", "500", "--seed", "11",
    ]));
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["lambda"], 0.5);
    assert_eq!(rows[1]["lambda"], 5.0);
    let low = rows[0]["gap"].as_f64().unwrap();
    let high = rows[1]["gap"].as_f64().unwrap();
    assert!(high > low);
    assert_eq!(doc["reports"].as_array().unwrap().len(), 4);
}

#[test]
fn sampling_runs_are_reproducible() {
    let args = [
        "sample", "--lambda", "2", "--v0", "0,0", "--sweeps", "2000",
        "--burn-in", "200", "--seed", "42",
    ];
    let first = stdout_json(&run(&args));
    let second = stdout_json(&run(&args));
    assert_eq!(first["rows"], second["rows"]);
    assert_eq!(first["config_hash"], second["config_hash"]);
}
