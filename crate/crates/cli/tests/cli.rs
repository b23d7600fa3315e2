use std::path::Path;
use std::process::{Command, Output};

fn offpac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_offpac")).args(args).output().expect("binary runs")
}

fn small_run(out: &Path) -> Output {
    offpac(&[
        "run",
        "--env",
        "grid_world",
        "--algorithm",
        "offpac",
        "--num-episodes",
        "3",
        "--num-runs",
        "2",
        "--eval-points",
        "3",
        "--eval-episodes",
        "1",
        "--max-steps",
        "200",
        "--parallelism",
        "1",
        "--out-dir",
        out.to_str().unwrap(),
    ])
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = small_run(dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let raw = std::fs::read_to_string(dir.path().join("raw.csv")).unwrap();
    assert_eq!(raw.lines().count(), 1 + 2 * 3);
    assert!(dir.path().join("aggregate.csv").exists());

    let report_dir = dir.path().join("report");
    let report = offpac(&[
        "report",
        "--input",
        dir.path().join("raw.csv").to_str().unwrap(),
        "--out-dir",
        report_dir.to_str().unwrap(),
    ]);
    assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stderr));
    let stdout = String::from_utf8(report.stdout).unwrap();
    assert!(stdout.contains("grid_world") && stdout.contains("offpac"));
    assert!(report_dir.join("summary.csv").exists());
    assert!(report_dir.join("learning_curves.csv").exists());
}

#[test]
fn repeated_runs_write_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(small_run(a.path()).status.success());
    assert!(small_run(b.path()).status.success());
    for f in ["raw.csv", "aggregate.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn config_file_and_dry_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cell.toml");
    std::fs::write(&cfg, "env = \"pendulum\"\nalgorithm = \"greedy_gq\"\nlambda = 0.2\n").unwrap();
    let out = offpac(&["run", "--config", cfg.to_str().unwrap(), "--alpha-v", "0.5", "--dry-run"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("env = \"pendulum\""));
    assert!(text.contains("algorithm = \"greedy_gq\""));
    assert!(text.contains("alpha_v = 0.5"));
}

#[test]
fn sweep_prints_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.toml");
    std::fs::write(
        &spec,
        "algorithms = [\"behavior\", \"q_lambda\"]\nalpha_v = [0.1, 0.5]\nlambda = [0.0]\n\n[base]\nenv = \"mountain_car\"\nnum_episodes = 2\nnum_runs = 1\neval_points = 1\neval_episodes = 1\nmax_steps = 100\n",
    )
    .unwrap();
    let out = offpac(&["sweep", "--config", spec.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("q_lambda") && text.contains("behavior"));
    assert!(dir.path().join("raw.csv").exists());
}

#[test]
fn oracle_checks_pass() {
    let out = offpac(&["oracle", "--samples", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS") && !text.contains("FAIL"));
}

#[test]
fn invalid_input_is_rejected() {
    assert!(!offpac(&["run", "--lambda", "2.0", "--dry-run"]).status.success());
    assert!(!offpac(&["run", "--env", "cartpole"]).status.success());
    let missing = offpac(&["report", "--input", "/nonexistent/raw.csv"]);
    assert!(!missing.status.success());
}
