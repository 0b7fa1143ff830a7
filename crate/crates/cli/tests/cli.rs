use std::path::Path;
use std::process::{Command, Output};

use cts_core::harness::{ResultsMetadata, ResultsTable};

const HEADER: &str = "agent,rep,t,cum_regret";

const SMALL: &str = r#"{
    "action_set": {"kind": "top-m", "d": 4, "m": 2},
    "env": {"family": "bernoulli", "mu": [0.2, 0.4, 0.6, 0.8]},
    "agents": [{"agent": "b-cts"}, {"agent": "bg-cts"}, {"agent": "escb"}],
    "horizon": 200,
    "replications": 6,
    "seed": 7,
    "thin": 50
}"#;

fn cts_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cts-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("error line on stderr");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {stderr}"))
}

#[test]
fn run_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_path = dir.path().join("results.csv");
    let out = cts_lab(&[
        "run",
        "--config",
        &config,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().next(), Some(HEADER));
    // 3 agents × 6 reps × checkpoints {50, 100, 150, 200}.
    assert_eq!(text.lines().count(), 1 + 3 * 6 * 4);

    let table = ResultsTable::read_csv(&out_path).unwrap();
    let meta = ResultsMetadata::read(&out_path.with_extension("json")).unwrap();
    assert_eq!((meta.d, meta.m), (4, 2));
    assert!(!meta.common_random_numbers.is_empty());
    assert_eq!(meta.aggregates, table.aggregate());
}

#[test]
fn run_without_output_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = cts_lab(&["run", "--config", &config]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().next(), Some(HEADER));
    assert!(String::from_utf8_lossy(&out.stderr).contains("escb: mean final regret"));
}

#[test]
fn parallelism_and_seed_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let one = cts_lab(&["run", "--config", &config, "--parallel", "1"]);
    let eight = cts_lab(&["run", "--config", &config, "--parallel", "8"]);
    assert!(one.status.success() && eight.status.success());
    assert_eq!(one.stdout, eight.stdout);
    let reseeded = cts_lab(&["run", "--config", &config, "--seed", "8"]);
    assert_ne!(one.stdout, reseeded.stdout);
}

#[test]
fn json_export_format() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_path = dir.path().join("results.json");
    let out = cts_lab(&[
        "run",
        "--config",
        &config,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(doc.is_object());
}

#[test]
fn diagnose_emits_report_csv() {
    let out = cts_lab(&[
        "diagnose", "--event", "B", "--t-grid", "20,30", "--reps", "2000",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "event,t,reps,frequency,std_error,bound,pass");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("B,20,2000,"));
    assert!(lines[2].starts_with("B,30,2000,"));
}

#[test]
fn constants_and_bound_print_json() {
    let out = cts_lab(&["constants"]);
    assert!(out.status.success());
    let c: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((c["alpha"].as_f64().unwrap() - 0.131).abs() < 1e-3);
    let out = cts_lab(&["constants", "--c6", "half-c2"]);
    let c2: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(c2["c6"].as_f64().unwrap() > c["c6"].as_f64().unwrap());

    let out = cts_lab(&[
        "bound",
        "--T",
        "10000",
        "--m",
        "50",
        "--d",
        "100",
        "--delta-min",
        "10",
        "--sigma",
        "0.5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let b: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(b["bg_cts_upper_bound"]["total"].as_f64().unwrap() > 0.0);
    assert!(b["b_cts_lower_bound"]["value"].is_number());
    assert_eq!(b["inputs"]["horizon"], 10000);
}

#[test]
fn errors_are_json_with_nonzero_exit() {
    let out = cts_lab(&["run", "--config", "/nonexistent/exp.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "io");

    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"action_set": {"kind": "two-block", "d": 3}}"#,
    );
    let out = cts_lab(&["run", "--config", &config]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "config");

    let out = cts_lab(&["diagnose", "--event", "Q", "--t-grid", "20", "--reps", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "diagnostics");

    let out = cts_lab(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "usage");
}

#[test]
fn invalid_experiment_reports_core_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("\"horizon\": 200", "\"horizon\": 0");
    let config = write_config(dir.path(), &bad);
    let out = cts_lab(&["run", "--config", &config]);
    assert_eq!(out.status.code(), Some(1));
    let err = error_json(&out);
    assert_eq!(err["error"], "harness");
    assert!(err["message"].as_str().unwrap().contains("horizon"));
}
