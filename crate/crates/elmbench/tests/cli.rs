//! Black-box tests of the `elmbench` binary: flag surface, CSV contract,
//! determinism, exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elmbench"))
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn run_iris(hidden: &str, extra: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = bin();
    cmd.args([
        "--dataset",
        "iris",
        "--method",
        "ciw",
        "--hidden",
        hidden,
        "--repeats",
        "2",
        "--seed",
        "5",
        "--activation",
        "sigmoid",
    ])
    .arg("--data-dir")
    .arg(data_dir());
    if let Some(p) = out {
        cmd.arg("--out").arg(p);
    }
    cmd.args(extra);
    cmd.output().expect("spawn elmbench")
}

#[test]
fn sweep_writes_csv_with_pinned_header_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("iris.csv");
    let output = run_iris("9", &[], Some(&out));
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dataset,method,hidden,seed,accuracy,train_time_s,residual"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], "iris");
        assert_eq!(fields[1], "ciw");
        assert_eq!(fields[2], "9");
        let acc: f64 = fields[4].parse().unwrap();
        assert!((0.0..=1.0).contains(&acc));
        assert_eq!(fields[4].split('.').nth(1).unwrap().len(), 4);
    }

    let summary = std::fs::read_to_string(dir.path().join("iris_summary.csv")).unwrap();
    assert!(summary.starts_with(
        "dataset,method,hidden,repeats,mean_accuracy,std_accuracy,mean_train_time_s"
    ));
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn identical_invocations_produce_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(run_iris("9", &[], Some(&a)).status.success());
    assert!(run_iris("9", &[], Some(&b)).status.success());
    let ca = std::fs::read_to_string(&a).unwrap();
    let cb = std::fs::read_to_string(&b).unwrap();
    // timing fluctuates; everything else is pinned
    let strip = |s: &str| -> Vec<String> {
        s.lines()
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                if f.len() == 7 {
                    format!("{},{},{},{},{},{}", f[0], f[1], f[2], f[3], f[4], f[6])
                } else {
                    l.to_string()
                }
            })
            .collect()
    };
    assert_eq!(strip(&ca), strip(&cb));
}

#[test]
fn unknown_dataset_fails_with_diagnostic() {
    let output = bin()
        .args(["--dataset", "digits", "--method", "elm", "--hidden", "4"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unknown dataset"), "{stderr}");
}

#[test]
fn missing_file_fails_with_path_in_message() {
    let output = bin()
        .args([
            "--dataset",
            "iris",
            "--method",
            "elm",
            "--hidden",
            "4",
            "--csv",
            "/nonexistent/iris.data",
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("sweep failed"), "{stderr}");
}

#[test]
fn hidden_below_class_count_is_rejected_for_ciw() {
    let output = run_iris("2", &[], None);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("smaller than the class count"), "{stderr}");
}

#[test]
fn keep_going_completes_and_reports_failed_cells() {
    // equal allocation cannot split 10 neurons over 3 classes
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial.csv");
    let output = run_iris(
        "9,10",
        &["--allocation", "equal", "--keep-going"],
        Some(&out),
    );
    assert!(!output.status.success(), "failed cells must flip the exit code");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("cell failed"), "{stderr}");
    let csv = std::fs::read_to_string(&out).unwrap();
    // d=9 cells survive, d=10 cells do not
    assert_eq!(csv.lines().filter(|l| l.contains(",9,")).count(), 2);
    assert!(!csv.lines().any(|l| l.contains(",10,")));

    // without --keep-going the first failing cell aborts the run
    let output = run_iris("10,9", &["--allocation", "equal"], None);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("hidden=10"), "{stderr}");
}

#[test]
fn env_var_supplies_the_data_directory() {
    let output = bin()
        .args([
            "--dataset", "iris", "--method", "elm", "--hidden", "5", "--repeats", "1",
        ])
        .env("ELMBENCH_DATA_DIR", data_dir())
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("iris"), "{stdout}");
}
