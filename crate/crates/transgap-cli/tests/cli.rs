//! Black-box checks of the binary: exit codes, output shapes, determinism,
//! and render round trips.

use std::path::Path;
use std::process::{Command, Output};

fn transgap(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transgap"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout_str(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn write_quick_config(dir: &Path) -> String {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        serde_json::to_vec_pretty(&serde_json::json!({
            "experiment_id": "cli-probe",
            "data": { "source": "blobs", "n": 12, "d": 2, "classes": 2, "separation": 2.0 },
            "setting": "random-splitting",
            "m": 6,
            "k": 1,
            "t2": 2,
            "t3": 5,
            "model": { "type": "logistic-regression" },
            "optimizer": { "kind": "adagrad", "lr": 0.5, "epsilon": 1e-8, "iterations": 40 },
            "criterion": "zero-one",
            "bounds_requested": ["f-cmi", "e-cmi", "id-cmi"],
            "master_seed": 5
        }))
        .unwrap(),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let missing = transgap(&["run", "--config", "no-such-config.json", "--out", "out"], d);
    assert_eq!(code(&missing), 2, "missing config file");
    assert!(!missing.stderr.is_empty());

    std::fs::write(d.join("broken.json"), b"{\"nope\": 1}").unwrap();
    let malformed = transgap(&["run", "--config", "broken.json", "--out", "out"], d);
    assert_eq!(code(&malformed), 2, "malformed config");

    let odd = transgap(&["gen-data", "csbm", "--n", "7", "--phi", "0.0", "--seed", "1"], d);
    assert_eq!(code(&odd), 2, "csbm size must be even");

    let bad_phi = transgap(&["gen-data", "csbm", "--n", "8", "--phi", "2.0", "--seed", "1"], d);
    assert_eq!(code(&bad_phi), 2, "phi outside [-1, 1]");

    let unknown_flag = transgap(&["run", "--bogus"], d);
    assert_eq!(code(&unknown_flag), 2, "unknown flag");

    let small_verify = transgap(&["verify", "--max-n", "3"], d);
    assert_eq!(code(&small_verify), 2, "verify below the smallest instance");

    std::fs::write(
        d.join("neg.json"),
        serde_json::to_vec(&serde_json::json!({
            "m": 4, "u": 4, "requests": [ { "bound": "mi-expectation", "mi": -1.0 } ]
        }))
        .unwrap(),
    )
    .unwrap();
    let negative_mi = transgap(&["bounds", "--in", "neg.json"], d);
    assert_eq!(code(&negative_mi), 2, "negative information");

    std::fs::write(
        d.join("unknown.json"),
        serde_json::to_vec(&serde_json::json!({
            "m": 4, "u": 4, "requests": [ { "bound": "no-such-bound" } ]
        }))
        .unwrap(),
    )
    .unwrap();
    let unknown_bound = transgap(&["bounds", "--in", "unknown.json"], d);
    assert_eq!(code(&unknown_bound), 2, "unknown bound name");
}

#[test]
fn gen_data_is_deterministic_and_summarized() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = |out: &str| {
        [
            "gen-data", "csbm", "--n", "12", "--d", "3", "--phi", "-0.25", "--seed", "5",
            "--out", out,
        ]
        .map(String::from)
    };
    let first = transgap(&args("a.json").iter().map(String::as_str).collect::<Vec<_>>(), d);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let second = transgap(&args("b.json").iter().map(String::as_str).collect::<Vec<_>>(), d);
    assert_eq!(code(&second), 0);
    let a = std::fs::read(d.join("a.json")).unwrap();
    let b = std::fs::read(d.join("b.json")).unwrap();
    assert_eq!(a, b, "same seed must produce identical dataset bytes");
    assert!(stdout_str(&first).contains("n = 12"));

    let summary = transgap(
        &[
            "--json", "gen-data", "blobs", "--n", "10", "--d", "2", "--sep", "1.0", "--seed",
            "3", "--out", "c.json",
        ],
        d,
    );
    assert_eq!(code(&summary), 0);
    let value: serde_json::Value = serde_json::from_str(&stdout_str(&summary)).unwrap();
    assert_eq!(value["n"], 10);
    assert_eq!(value["classes"], 2);
    assert!(d.join("c.json").exists());
}

#[test]
fn run_writes_parseable_outputs_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = write_quick_config(d);

    let human = transgap(&["run", "--config", &config, "--out", "first"], d);
    assert_eq!(code(&human), 0, "{}", String::from_utf8_lossy(&human.stderr));
    assert!(stdout_str(&human).contains("gap:"));
    for name in ["report.json", "trials.jsonl", "report.csv"] {
        assert!(d.join("first").join(name).exists(), "{name} missing");
    }

    let json_mode = transgap(&["--json", "run", "--config", &config, "--out", "second"], d);
    assert_eq!(code(&json_mode), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&json_mode)).unwrap();
    assert_eq!(report["experiment_id"], "cli-probe");
    assert_eq!(report["n"], 12);
    assert_eq!(report["cells_used"], 2);
    assert!(report["bounds"].as_array().unwrap().len() == 3);
    assert!(report["config"]["master_seed"] == 5);

    let a = std::fs::read(d.join("first/report.json")).unwrap();
    let b = std::fs::read(d.join("second/report.json")).unwrap();
    assert_eq!(a, b, "rerun must be byte-identical");

    for line in std::fs::read_to_string(d.join("first/trials.jsonl")).unwrap().lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(record["gap"].is_number());
        assert_eq!(record["selector_rows"].as_array().unwrap().len(), 6);
    }
}

#[test]
fn bounds_catalog_matches_golden_output() {
    let dir = tempfile::tempdir().unwrap();
    let output = transgap(&["bounds", "--in", &fixture("bounds_catalog.json")], dir.path());
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    let expected = std::fs::read(fixture("bounds_catalog_expected.json")).unwrap();
    assert_eq!(
        output.stdout, expected,
        "bound catalog output drifted from the recorded values"
    );

    let results: Vec<serde_json::Value> = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(results.len(), 21);
    let zero_information = &results[1];
    assert_eq!(zero_information["value"], 0.0, "zero MI must give a zero bound");
    assert_eq!(zero_information["vacuous"], false);
    let inflated = &results[2];
    assert_eq!(inflated["vacuous"], true, "bound above the loss range must be flagged");
    let grid = results.iter().find(|r| r["bound"] == "pac-bayes-grid").unwrap();
    assert!(grid["lambda"].as_f64().unwrap() >= 1.0);
    let flat = results.iter().find(|r| r["bound"] == "flatness").unwrap();
    assert!(flat["rho"].as_f64().unwrap() > 0.0);
}

#[test]
fn bounds_pointwise_matches_hand_value() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("pointwise.json"),
        serde_json::to_vec(&serde_json::json!({
            "m": 2, "u": 2, "k": 1,
            "requests": [
                { "bound": "pointwise-cmi", "per_index": [[0.5, 0.125], [0.02]], "variant": "f" },
                { "bound": "pointwise-cmi", "per_index": [[0.0], [0.0]], "variant": "id" }
            ]
        }))
        .unwrap(),
    )
    .unwrap();
    let output = transgap(&["--json", "bounds", "--in", "pointwise.json"], d);
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    let results: Vec<serde_json::Value> = serde_json::from_str(&stdout_str(&output)).unwrap();
    // Row means of sqrt(2 I): (1 + 0.5)/2 and 0.2, so the bound is
    // (0.75 + 0.2)/2 = 0.475.
    let hand = 0.475;
    assert!((results[0]["value"].as_f64().unwrap() - hand).abs() < 1e-12);
    assert_eq!(results[1]["value"], 0.0);
}

#[test]
fn verify_prints_a_passing_checklist() {
    let dir = tempfile::tempdir().unwrap();
    let output = transgap(&["verify", "--max-n", "4"], dir.path());
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    let text = stdout_str(&output);
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
    assert!(text.contains("checks passed"));

    let as_json = transgap(&["--json", "verify", "--max-n", "4"], dir.path());
    assert_eq!(code(&as_json), 0);
    let value: serde_json::Value = serde_json::from_str(&stdout_str(&as_json)).unwrap();
    let checks = value["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn export_round_trips_saved_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = write_quick_config(d);
    let run = transgap(&["run", "--config", &config, "--out", "out"], d);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let csv_out = transgap(&["export", "--report", "out/report.json", "--format", "csv"], d);
    assert_eq!(code(&csv_out), 0);
    let written = std::fs::read(d.join("out/report.csv")).unwrap();
    assert_eq!(csv_out.stdout, written, "export must re-render the same CSV bytes");

    let mut reader = csv::Reader::from_reader(csv_out.stdout.as_slice());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        vec!["experiment_id", "n", "m", "k", "quantity", "mean", "std", "vacuous_fraction"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4, "one gap row plus three bound rows");
    assert_eq!(rows[0].get(4), Some("gap"));
    for row in &rows {
        assert_eq!(row.len(), 8);
        row.get(5).unwrap().parse::<f64>().unwrap();
    }

    let json_out = transgap(&["export", "--report", "out/report.json", "--format", "json"], d);
    assert_eq!(code(&json_out), 0);
    let original = std::fs::read(d.join("out/report.json")).unwrap();
    assert_eq!(json_out.stdout, original, "JSON re-render must reproduce the file");

    let to_file = transgap(
        &["export", "--report", "out/report.json", "--format", "csv", "--out", "copy.csv"],
        d,
    );
    assert_eq!(code(&to_file), 0);
    assert_eq!(std::fs::read(d.join("copy.csv")).unwrap(), written);

    let missing = transgap(&["export", "--report", "nope.json"], d);
    assert_eq!(code(&missing), 2);
}
