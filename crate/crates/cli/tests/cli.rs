//! End-to-end runs of the `arcdet` binary.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_arcdet");

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("ARCDET_OUTPUT_DIR")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Values following `ln D =` on each output line.
fn log_dets(text: &str) -> Vec<f64> {
    text.lines()
        .filter_map(|l| l.split("ln D =").nth(1))
        .map(|rest| rest.split_whitespace().next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn det_two_by_two_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["det", "--m", "1", "--N", "2", "--epsilon", "0.5"],
    );
    assert_eq!(o.status.code(), Some(0));
    let expected = (0.25 - 1.0 / std::f64::consts::PI.powi(2)).ln();
    let values = log_dets(&stdout(&o));
    assert_eq!(values.len(), 2, "{}", stdout(&o));
    for v in values {
        assert!((v - expected).abs() < 1e-14, "{v} vs {expected}");
    }
}

#[test]
fn det_degenerate_case() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["det", "--m", "7", "--N", "4", "--epsilon", "0.4"],
    );
    assert_eq!(o.status.code(), Some(0));
    for v in log_dets(&stdout(&o)) {
        assert!((v - 4.0 * 0.4f64.ln()).abs() < 1e-14);
    }
}

#[test]
fn det_writes_requested_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "det", "--m", "5", "--N", "23", "--format", "json", "--out", "d.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.json")).unwrap()).unwrap();
    let records = doc["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    let a = records[0]["value"].as_f64().unwrap();
    let b = records[1]["value"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-9);
    assert!(doc["metadata"]["run_config"].is_object());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_in(dir.path(), &["det", "--bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(run_in(dir.path(), &["frobnicate"]).status.code(), Some(1));
    let o = run_in(dir.path(), &["det", "--N", "4", "--epsilon", "1.5"]);
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(run_in(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn insufficient_fixed_precision_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "det",
            "--m",
            "1",
            "--N",
            "120",
            "--epsilon",
            "0.2",
            "--precision",
            "f64",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn asym_reports_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["asym", "--m", "5", "--N", "100", "--epsilon", "0.5"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let residual: f64 = text
        .lines()
        .find(|l| l.trim_start().starts_with("residual"))
        .and_then(|l| l.split_whitespace().nth(1))
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("no residual line in\n{text}"));
    assert!(residual.abs() < 1e-5, "{residual}");
}

#[test]
fn figure2_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["residual", "--figure2", "--out", "fig2.csv"];
    assert_eq!(run_in(dir.path(), &args).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("fig2.csv")).unwrap();
    let text = String::from_utf8_lossy(&first);
    let data_rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(data_rows, 1 + 11 * 11);
    for k in 0..5 {
        assert!(dir.path().join(format!("fig2_n2_{k}.dat")).exists());
    }
    assert!(dir.path().join("fig2_reference.dat").exists());

    assert_eq!(run_in(dir.path(), &args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("fig2.csv")).unwrap());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("results");
    let o = Command::new(BIN)
        .args([
            "residual",
            "--m",
            "3",
            "--N",
            "12:14",
            "--epsilon",
            "0.3",
            "--order",
            "2",
        ])
        .current_dir(dir.path())
        .env("ARCDET_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(target.join("residual.csv").exists());
    assert!(!dir.path().join("residual.csv").exists());
}

#[test]
fn quick_selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["selftest", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
