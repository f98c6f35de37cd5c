//! End-to-end tests of the `l4bench` binary: argument parsing, config
//! loading, output files, flag overrides, and error reporting.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn l4bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l4bench"))
        .args(args)
        .output()
        .expect("binary launches")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const REGRESSION_RUN: &str = r#"
[problem]
kind = "regression"

[optimizer]
kind = "l4mom"

[run]
max_steps = 20
restarts = 2
"#;

#[test]
fn run_writes_metrics_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "reg.toml", REGRESSION_RUN);
    let out = dir.path().join("out");
    let result = l4bench(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("l4mom"), "stdout: {stdout}");
    assert!(stdout.contains("final loss"), "stdout: {stdout}");
    assert!(out.join("l4mom-s0.csv").is_file());
    assert!(out.join("l4mom-s1.csv").is_file());
    assert!(out.join("summary.json").is_file());
}

#[test]
fn seed_and_restart_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "reg.toml", REGRESSION_RUN);
    let out = dir.path().join("out");
    let result = l4bench(&[
        "run",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "7",
        "--restarts",
        "1",
    ]);
    assert!(result.status.success());
    assert!(out.join("l4mom-s7.csv").is_file(), "seed override applies");
    assert!(
        !out.join("l4mom-s0.csv").exists(),
        "restart override supersedes the config's 2"
    );
}

#[test]
fn invalid_config_fails_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.toml",
        "[problem]\nkind = \"regression\"\n\n[optimizer]\nkind = \"warp\"\n\n[run]\nmax_steps = 5\n",
    );
    let out = dir.path().join("out");
    let result = l4bench(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("warp"), "names the bad kind: {stderr}");
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let result = l4bench(&["run", "--out", "/tmp/nowhere"]);
    assert_eq!(result.status.code(), Some(2), "clap usage errors exit 2");
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("--config"), "stderr: {stderr}");
}

#[test]
fn mnist_without_files_notes_the_synthetic_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("no-mnist-here");
    let config = write_config(
        dir.path(),
        "mnist.toml",
        &format!(
            r#"
[problem]
kind = "mnist"
batch_size = 16
subset = 64
data_dir = "{}"

[optimizer]
kind = "l4adam"

[run]
max_steps = 3
"#,
            data_dir.display()
        ),
    );
    let out = dir.path().join("out");
    let result = l4bench(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("synthetic") && stderr.contains(&*data_dir.to_string_lossy()),
        "fallback note with download instructions, got: {stderr}"
    );
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("synthetic-fallback"), "stdout: {stdout}");
}

#[test]
fn sweep_writes_one_subdirectory_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "synth.toml",
        r#"
[problem]
kind = "synthetic"
batch_size = 8
n = 24
features = 5
classes = 3

[optimizer]
kind = "l4adam"

[run]
max_epochs = 1
"#,
    );
    let out = dir.path().join("out");
    let result = l4bench(&[
        "sweep",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--sizes",
        "6,12",
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    assert!(out.join("bs6/summary.json").is_file());
    assert!(out.join("bs12/summary.json").is_file());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("batch size 6") && stdout.contains("batch size 12"));
}

#[test]
fn compare_renders_a_table_over_shared_problems() {
    let dir = tempfile::tempdir().unwrap();
    let common = r#"
[problem]
kind = "regression"
kappa = 100.0

[run]
max_steps = 40
stop_loss = 1e-4
"#;
    let a = write_config(
        dir.path(),
        "a.toml",
        &format!("{common}\n[optimizer]\nkind = \"l4mom\"\n"),
    );
    let b = write_config(
        dir.path(),
        "b.toml",
        &format!("{common}\n[optimizer]\nkind = \"sgd\"\nlr = 0.05\n"),
    );
    let out = dir.path().join("out");
    let result = l4bench(&[
        "compare",
        "--configs",
        &format!("{a},{b}"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("optimizer"), "table header: {stdout}");
    assert!(stdout.contains("l4mom") && stdout.contains("sgd"));
    assert!(out.join("comparison.csv").is_file());
    assert!(out.join("comparison.txt").is_file());
    assert!(out.join("00-l4mom/summary.json").is_file());
    assert!(out.join("01-sgd/summary.json").is_file());
}
