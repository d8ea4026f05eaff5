//! End-to-end checks of the command-line surface: golden scores, interval
//! output, exit codes, and determinism across worker counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wknn-shapley"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    bin().args(args).output().expect("spawn CLI")
}

fn stdout_of<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "CLI failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn value_args(method: &str, extra: &[&str]) -> Vec<String> {
    let mut args: Vec<String> = ["value", "--method", method, "--k", "5", "--bits", "3"]
        .map(String::from)
        .to_vec();
    args.push("--train".into());
    args.push(data("toy_train.csv").display().to_string());
    args.push("--val".into());
    args.push(data("toy_val.csv").display().to_string());
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

fn parse_column(csv: &str, col: usize) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|line| line.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn exact_scores_match_the_golden_file_and_the_oracle() {
    let got = stdout_of(&value_args("exact", &[]));
    let golden = std::fs::read_to_string(data("toy_golden.csv")).unwrap();
    assert_eq!(got, golden, "exact scores drifted from the golden file");

    // The golden was produced by the quadratic engine; enumeration of all
    // subsets must agree within 1e-9.
    let oracle = stdout_of(&value_args("oracle", &[]));
    let a = parse_column(&got, 1);
    let b = parse_column(&oracle, 1);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
}

#[test]
fn approx_output_orders_its_interval_columns() {
    let text = stdout_of(&value_args("approx", &["--mstar", "sqrt"]));
    assert!(text.starts_with("orig_index,value,lower,upper,eps\n"));
    let value = parse_column(&text, 1);
    let lower = parse_column(&text, 2);
    let upper = parse_column(&text, 3);
    let eps = parse_column(&text, 4);
    for i in 0..value.len() {
        assert!(lower[i] <= value[i] && value[i] <= upper[i]);
        assert!(eps[i] >= 0.0);
        assert!((upper[i] - lower[i] - eps[i]).abs() < 1e-12);
    }
}

#[test]
fn full_rank_approx_value_column_equals_exact() {
    let exact = stdout_of(&value_args("exact", &[]));
    let approx = stdout_of(&value_args("approx", &["--mstar", "12"]));
    let exact_vals: Vec<&str> = exact
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    let approx_vals: Vec<&str> = approx
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(exact_vals, approx_vals, "digit-for-digit value parity");
    let eps = parse_column(&approx, 4);
    assert!(eps.iter().all(|&e| e == 0.0));
}

#[test]
fn missing_required_flag_exits_with_usage_code() {
    let out = run(&["value", "--method", "exact"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("usage"), "no usage text: {err}");
}

#[test]
fn unreadable_input_exits_with_data_code() {
    let train = data("toy_train.csv").display().to_string();
    let out = run(&[
        "value", "--train", "/nonexistent/file.csv", "--val", &train,
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "expected one diagnostic line: {err}");
}

#[test]
fn identical_invocations_are_byte_identical_and_worker_invariant() {
    let one = stdout_of(&value_args("exact", &["--workers", "1"]));
    let again = stdout_of(&value_args("exact", &["--workers", "1"]));
    assert_eq!(one, again);
    let two = stdout_of(&value_args("exact", &["--workers", "2"]));
    let a = parse_column(&one, 1);
    let b = parse_column(&two, 1);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12);
    }
}

#[test]
fn mc_runs_are_seeded() {
    let a = stdout_of(&value_args("mc", &["--seed", "5", "--epsilon", "0.5", "--delta", "0.2"]));
    let b = stdout_of(&value_args("mc", &["--seed", "5", "--epsilon", "0.5", "--delta", "0.2"]));
    assert_eq!(a, b);
    let c = stdout_of(&value_args("mc", &["--seed", "6", "--epsilon", "0.5", "--delta", "0.2"]));
    assert_ne!(a, c);
}

#[test]
fn eval_mislabel_writes_report_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.txt");
    let train = data("toy_train.csv").display().to_string();
    let val = data("toy_val.csv").display().to_string();
    let out = run(&[
        "eval",
        "mislabel",
        "--train",
        &train,
        "--val",
        &val,
        "--method",
        "exact",
        "--k",
        "3",
        "--bits",
        "3",
        "--rate",
        "0.25",
        "--seed",
        "9",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let report = std::fs::read_to_string(&report_path).unwrap();
    assert!(report.contains("method=exact"));
    assert!(report.contains("n=12"));
    let auroc_line = report
        .lines()
        .find(|l| l.starts_with("auroc="))
        .expect("auroc line");
    let auroc: f64 = auroc_line.trim_start_matches("auroc=").parse().unwrap();
    assert!((0.0..=1.0).contains(&auroc));

    let scores_path = dir.path().join("report.txt.scores.csv");
    let scores = std::fs::read_to_string(scores_path).unwrap();
    assert_eq!(scores.lines().count(), 13);
}

#[test]
fn bench_reports_a_slope() {
    let text = stdout_of(&[
        "bench", "--sizes", "24,48,96", "--method", "approx", "--mstar", "sqrt", "--k", "3",
        "--bits", "2", "--seed", "1",
    ]);
    let slope_line = text
        .lines()
        .find(|l| l.starts_with("loglog_slope="))
        .expect("slope line");
    let slope: f64 = slope_line.trim_start_matches("loglog_slope=").parse().unwrap();
    assert!(slope.is_finite());
    assert_eq!(text.matches("dataset=gaussian-sign-").count(), 3);
}

#[test]
fn unweighted_baselines_run_on_the_toy_data() {
    for method in ["unweighted_soft", "unweighted_hard"] {
        let text = stdout_of(&value_args(method, &[]));
        assert_eq!(text.lines().count(), 13);
    }
}
