use std::fs;
use std::process::{Command, Output};

use kmfree::harness::{read_json_report, REPORT_HEADER};

fn kmfree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kmfree"))
        .args(args)
        .env_remove("KMFREE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn eg_bound_prints_six() {
    let o = kmfree(&["eg-bound", "--n", "7", "--k", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "6");
}

#[test]
fn run_reports_complete_graph() {
    let o = kmfree(&["run", "--n", "5", "--k", "3", "--seed", "0"]);
    assert!(o.status.success());
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert!(last.starts_with("classification:"), "{last}");
    assert!(last.contains("complete graph"), "{last}");
}

#[test]
fn run_trace_lists_every_pair() {
    let o = kmfree(&["run", "--n", "6", "--k", "sqrt", "--seed", "4", "--trace"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let (_, trace) = text.split_once("\n\n").expect("blank line before the trace");
    // Header plus one line per offered pair.
    assert_eq!(trace.lines().count(), 1 + 15);
}

#[test]
fn classify_star() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("star5.txt");
    fs::write(&path, "5 4\n0 1\n0 2\n0 3\n0 4\n").unwrap();
    let o = kmfree(&["classify", "--k", "2", "--input", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().next(), Some("G_star"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        kmfree(&["eg-bound", "--n", "7", "--k", "2", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(kmfree(&["frobnicate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "4 2\n0 1\n1 x\n").unwrap();
    let o = kmfree(&["classify", "--k", "2", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim().lines().count(), 1);

    let o = kmfree(&["batch", "--n", "10", "--k", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_is_an_error() {
    let o = kmfree(&["classify", "--k", "2", "--input", "/nonexistent/graph.txt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/graph.txt"));
}

#[test]
fn batch_csv_and_json() {
    let o = kmfree(&[
        "batch",
        "--n",
        "8,9",
        "--k",
        "3",
        "--trials",
        "5",
        "--base-seed",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], REPORT_HEADER.join(","));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let o = kmfree(&[
        "batch",
        "--n",
        "8",
        "--k",
        "3",
        "--trials",
        "5",
        "--charges",
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let reports = read_json_report(&path).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].trials, 5);
    assert_eq!(reports[0].status, "pass");
}

#[test]
fn batch_honours_output_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kmfree"))
        .args(["batch", "--n", "6", "--k", "2", "--trials", "3"])
        .env("KMFREE_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let written: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(written.len(), 1);
}

#[test]
fn oracle_prints_distribution() {
    let o = kmfree(&["oracle", "--n", "4", "--k", "2", "--matching", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("orderings: 720"));
    assert!(text.contains("G_star edges=3 orderings=360"));
    assert!(text.contains("G_clique edges=3 orderings=360"));
    assert!(text.contains("0 mismatches"));
}
