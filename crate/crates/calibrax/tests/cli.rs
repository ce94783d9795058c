//! End-to-end tests of the command-line interface, run against the built
//! binary via CARGO_BIN_EXE.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_calibrax"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn validate_schema(schema_file: &str, instance: &serde_json::Value) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas");
    let text = std::fs::read_to_string(root.join(schema_file)).unwrap();
    let schema: serde_json::Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{}: {e}", e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:?}");
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let f1 = dir.path().join("a.csv");
    let f2 = dir.path().join("b.csv");
    for f in [&f1, &f2] {
        let out = run(&[
            "simulate", "--dist", "D1", "--n", "100", "--seed", "1", "--out",
            f.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(out.stdout.is_empty(), "stdout must carry no artifact here");
    }
    assert_eq!(
        std::fs::read(&f1).unwrap(),
        std::fs::read(&f2).unwrap(),
        "same seed must give byte-identical files"
    );
    let out3 = run(&[
        "simulate", "--dist", "D1", "--n", "100", "--seed", "2", "--out",
        f2.to_str().unwrap(),
    ]);
    assert!(out3.status.success());
    assert_ne!(std::fs::read(&f1).unwrap(), std::fs::read(&f2).unwrap());
}

#[test]
fn metrics_ks_two_sample_file() {
    let dir = TempDir::new().unwrap();
    let pairs = dir.path().join("two.csv");
    std::fs::write(&pairs, "confidence,hit\n0.2,0\n0.8,1\n").unwrap();
    let out = run(&["metrics", "--in", pairs.to_str().unwrap(), "--metrics", "ks"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["metrics"]["ks"].as_f64().unwrap(), 0.1);
    validate_schema("metrics-report.schema.json", &report);
}

#[test]
fn metrics_csv_format() {
    let dir = TempDir::new().unwrap();
    let pairs = dir.path().join("two.csv");
    std::fs::write(&pairs, "confidence,hit\n0.2,0\n0.8,1\n").unwrap();
    let out = run(&[
        "--format", "csv", "metrics", "--in", pairs.to_str().unwrap(), "--metrics", "ks",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "metric,value\nks,0.1\n");
}

#[test]
fn estimate_missing_file_is_io_error() {
    let out = run(&["estimate", "--in", "missing.csv", "--out", "c.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.starts_with("E_IO: "), "stderr: {err}");
    assert_eq!(err.lines().count(), 1, "one-line error contract: {err}");
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["simulate", "--nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_then_curve_eval_identity_grid() {
    let dir = TempDir::new().unwrap();
    let curve = dir.path().join("curve.json");
    std::fs::write(&curve, r#"{"alpha":1.0,"beta":1.0,"c":0.0}"#).unwrap();
    let grid = dir.path().join("grid.csv");
    let out = run(&[
        "curve-eval", "--curve", curve.to_str().unwrap(), "--grid", "4", "--out",
        grid.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&grid).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,g"));
    for (i, line) in lines.enumerate() {
        let mut cells = line.split(',').map(|c| c.parse::<f64>().unwrap());
        let s = cells.next().unwrap();
        let g = cells.next().unwrap();
        assert_eq!(s, i as f64 / 4.0);
        assert!((g - s).abs() < 1e-12, "identity curve at {s} gave {g}");
    }

    // grid 0 is a usage error
    let bad = run(&[
        "curve-eval", "--curve", curve.to_str().unwrap(), "--grid", "0", "--out",
        grid.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn estimate_output_validates_and_feeds_curve_eval() {
    let dir = TempDir::new().unwrap();
    let pairs = dir.path().join("pairs.csv");
    let curve = dir.path().join("curve.json");
    let grid = dir.path().join("grid.csv");
    let out = run(&[
        "simulate", "--dist", "D1", "--n", "2000", "--seed", "5", "--out",
        pairs.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "estimate", "--in", pairs.to_str().unwrap(), "--out", curve.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&curve).unwrap()).unwrap();
    validate_schema("curve.schema.json", &report);

    let out = run(&[
        "curve-eval", "--curve", curve.to_str().unwrap(), "--grid", "1000", "--out",
        grid.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&grid).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1001);
    let mut prev = -1.0f64;
    for row in rows {
        let g: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(g >= prev, "curve must be non-decreasing");
        prev = g;
    }
}

#[test]
fn ingest_logits_hand_example() {
    let dir = TempDir::new().unwrap();
    let logits = dir.path().join("logits.jsonl");
    std::fs::write(
        &logits,
        "{\"logits\":[2.0,1.0,0.0],\"label\":0}\n{\"logits\":[0.0,3.0],\"label\":0}\n",
    )
    .unwrap();
    let pairs = dir.path().join("pairs.csv");
    let out = run(&[
        "ingest-logits", "--in", logits.to_str().unwrap(), "--out", pairs.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&pairs).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("confidence,hit"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let conf: f64 = first[0].parse().unwrap();
    assert!((conf - 0.665_240_955_774_821_6).abs() < 1e-12);
    assert_eq!(first[1], "1");
    let second: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(second[1], "0"); // label 0 but argmax 1
}

#[test]
fn calibrate_histogram_end_to_end() {
    let dir = TempDir::new().unwrap();
    let train = dir.path().join("train.csv");
    std::fs::write(&train, "confidence,hit\n0.6,0\n0.7,1\n0.8,1\n0.9,1\n").unwrap();
    let apply = dir.path().join("apply.csv");
    std::fs::write(&apply, "confidence,hit\n0.65,1\n0.95,0\n").unwrap();
    let out_csv = dir.path().join("out.csv");
    let map_json = dir.path().join("map.json");
    let out = run(&[
        "calibrate", "--method", "hb", "--bins", "2", "--train", train.to_str().unwrap(),
        "--apply", apply.to_str().unwrap(), "--out", out_csv.to_str().unwrap(),
        "--map-out", map_json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert_eq!(text, "confidence,hit\n0.5,1\n1,0\n");
    let map: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&map_json).unwrap()).unwrap();
    assert_eq!(map["kind"], "histogram");
    validate_schema("calibration-map.schema.json", &map);
}

#[test]
fn benchmark_report_validates() {
    let dir = TempDir::new().unwrap();
    let report_path = dir.path().join("report.json");
    let trials = dir.path().join("trials.csv");
    let out = run(&[
        "--quiet", "benchmark", "--kind", "ead", "--dists", "D3", "--sizes", "500",
        "--runs", "6", "--seed", "4", "--out", report_path.to_str().unwrap(),
        "--per-trial", trials.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    assert!(stderr(&out).is_empty(), "--quiet must silence notes");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    validate_schema("benchmark-report.schema.json", &report);
    let trial_text = std::fs::read_to_string(&trials).unwrap();
    // header + 6 runs x 2 arms
    assert_eq!(trial_text.lines().count(), 13, "{trial_text}");

    // metrics kind validates against the same schema
    let out = run(&[
        "--quiet", "benchmark", "--kind", "metrics", "--dists", "D3", "--sizes", "500",
        "--runs", "2", "--seed", "4", "--out", report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    validate_schema("benchmark-report.schema.json", &report);
}

#[test]
fn simulate_accepts_spec_file() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"curve":{"kind":"constant","value":1.0},"confidence":{"a1":2.0,"a2":2.0}}"#,
    )
    .unwrap();
    let out_csv = dir.path().join("f.csv");
    let out = run(&[
        "simulate", "--dist", spec.to_str().unwrap(), "--n", "10", "--seed", "1", "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",1"), "constant-1 curve must only produce hits");
    }
}
