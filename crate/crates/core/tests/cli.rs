//! The `coshare` binary: exit codes, formats, artifacts, determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn coshare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coshare")).args(args).output().unwrap()
}

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn task_file_runs() {
    let out = coshare(&[sample("improve-step-up.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["status"], "ok");
}

#[test]
fn reproduce_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = coshare(&["reproduce", "ex-4.2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["ex-4.2.json", "ex-4.2-constrained.csv", "ex-4.2-improved.csv", "ex-4.2-family.csv"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("ex-4.2-improved.csv")).unwrap();
    assert!(csv.starts_with("atom,prob,S,X_1"), "{csv}");
}

#[test]
fn output_is_deterministic() {
    let run = || coshare(&["reproduce", "fig-6.3", "--format", "csv"]).stdout;
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
}

#[test]
fn text_format() {
    let out = coshare(&["reproduce", "ex-3.1", "--format", "text"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("ex-3.1"));
}

#[test]
fn malformed_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"schema_version": 1}"#).unwrap();
    let out = coshare(&[path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing field"));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&coshare(&[])), 1);
    assert_eq!(code(&coshare(&["reproduce", "ex-9.9"])), 1);
    assert_eq!(code(&coshare(&["reproduce", "ex-3.1", "--tol", "-1"])), 1);
    assert_eq!(code(&coshare(&["reproduce", "ex-3.1", "--tol=-1"])), 1);
    assert_eq!(code(&coshare(&["--help"])), 0);
    assert_eq!(code(&coshare(&["reproduce", "ex-3.1", "--format", "yaml"])), 1);
    let out = Command::new(env!("CARGO_BIN_EXE_coshare"))
        .args(["reproduce", "ex-3.1"])
        .env("COSHARE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn empty_grid_is_infeasible() {
    let text = std::fs::read_to_string(sample("oracle-step-up.json")).unwrap();
    let text = text.replace(r#""lo": "1/4", "hi": "7/4", "step": "1/100""#, r#""lo": "5", "hi": "6", "step": "1/2""#);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    std::fs::write(&path, text).unwrap();
    let out = coshare(&[path.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn loose_tolerance_is_a_mismatch() {
    // with a huge feasibility tolerance the conditional-mean allocation is
    // feasible, so no witness exists and the pinned check fails
    let out = coshare(&["reproduce", "ex-3.1", "--tol", "10"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("witness found"));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "mismatch");
}

#[test]
fn thread_count_does_not_change_results() {
    let with = |n: &str| {
        Command::new(env!("CARGO_BIN_EXE_coshare"))
            .args(["reproduce", "ex-4.2"])
            .env("COSHARE_THREADS", n)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(with("1"), with("4"));
}
