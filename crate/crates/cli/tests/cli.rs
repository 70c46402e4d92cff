use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SYNTH: &str = "40,200,0.05,0.3";

fn slores(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slores"))
        .args(args)
        .output()
        .expect("spawn slores")
}

fn tiny() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/tiny.svm")
}

fn path_run(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["path", "--synthetic", SYNTH, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    slores(&args)
}

#[test]
fn path_writes_csv_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_run(
        dir.path(),
        &["--grid", "0.5:0.9:5", "--rules", "none,slores,strong"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("path.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("lambda_ratio,rule,n_discarded"));
    assert_eq!(lines.count(), 15);
}

#[test]
fn path_without_timings_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = path_run(dir.path(), &["--grid", "0.3:0.9:7", "--no-timings"]);
        assert!(out.status.success());
    }
    let first = fs::read(a.path().join("path.csv")).unwrap();
    let second = fs::read(b.path().join("path.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn path_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_run(dir.path(), &["--grid", "0.9:0.9:1", "--format", "json"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("path.json")).unwrap();
    assert!(text.trim_start().starts_with('['));
    assert!(text.contains("\"rule\": \"slores\""));
}

#[test]
fn bad_grid_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_run(dir.path(), &["--grid", "0.5:1.5:3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("path.csv").exists());
}

#[test]
fn missing_file_exits_with_one() {
    let out = slores(&[
        "screen",
        "--data",
        "/nonexistent/file.svm",
        "--ratio",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn screen_prints_kept_indices() {
    let out = slores(&["screen", "--synthetic", SYNTH, "--ratio", "0.5"]);
    assert!(out.status.success());
    let kept: Vec<usize> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert!(!kept.is_empty() && kept.len() < 200);
    assert!(kept.windows(2).all(|w| w[0] < w[1]));

    let none = slores(&[
        "screen",
        "--synthetic",
        SYNTH,
        "--ratio",
        "0.5",
        "--rule",
        "none",
    ]);
    assert_eq!(String::from_utf8(none.stdout).unwrap().lines().count(), 200);

    let above = slores(&["screen", "--synthetic", SYNTH, "--ratio", "1.2"]);
    assert!(above.status.success());
    assert!(above.stdout.is_empty());
}

#[test]
fn solve_reports_objective_and_support() {
    let data = tiny();
    let out = slores(&["solve", "--data", data.to_str().unwrap(), "--ratio", "0.5"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let field = |name: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(name)).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert!(field("objective") > 0.0 && field("objective") < std::f64::consts::LN_2 + 1e-12);
    assert!(field("gap") <= 1e-9);
    let nz = field("nonzeros") as usize;
    assert!(nz >= 1);
    assert_eq!(text.lines().count(), 8 + nz);
}

#[test]
fn verify_passes_on_synthetic_data() {
    let out = slores(&["verify", "--synthetic", SYNTH, "--grid", "0.2:0.9:4"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[ok]")).count(), 5);
}
