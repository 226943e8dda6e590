use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosched"))
        .current_dir(root)
        .env_remove("COSCHED_OUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn ok(root: &Path, args: &[&str]) {
    let out = run(root, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn err(root: &Path, args: &[&str]) -> String {
    let out = run(root, args);
    assert!(!out.status.success(), "{args:?} should fail");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Defaults, a small dataset, a short training run and an 8-job workload.
fn setup() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    ok(root, &["defaults", "--out", "d"]);
    ok(root, &["gen-data", "d/space.json", "d/oracle.json", "--pairs", "6", "--test-pairs", "2", "--out", "data"]);
    ok(root, &["train", "data", "--epochs", "3", "--out", "model"]);
    ok(root, &["gen-workload", "--size", "8", "--seed", "2", "--out", "w"]);
    tmp
}

#[test]
fn zero_pairs_is_rejected() {
    let tmp = setup();
    let msg = err(tmp.path(), &["gen-data", "d/space.json", "d/oracle.json", "--pairs", "0", "--out", "none"]);
    assert!(msg.contains("pair"), "{msg}");
    assert!(!tmp.path().join("none").exists());
}

#[test]
fn odd_workload_is_rejected() {
    let tmp = setup();
    let root = tmp.path();
    ok(root, &["gen-workload", "--size", "7", "--out", "odd"]);
    let msg = err(root, &["schedule", "model/weights.json", "odd/workload.json", "d/space.json", "--out", "s"]);
    assert!(msg.contains('7'), "{msg}");
}

#[test]
fn malformed_row_names_its_line() {
    let tmp = setup();
    let root = tmp.path();
    let csv = root.join("data/dataset.csv");
    let mut lines: Vec<String> = fs::read_to_string(&csv).unwrap().lines().map(str::to_owned).collect();
    lines[4] = lines[4].replacen(',', ",oops,", 1);
    fs::write(&csv, lines.join("\n") + "\n").unwrap();
    let msg = err(root, &["train", "data", "--epochs", "1", "--out", "m2"]);
    assert!(msg.contains("line 5"), "{msg}");
}

#[test]
fn schedule_writes_the_full_graph() {
    let tmp = setup();
    let root = tmp.path();
    ok(root, &["schedule", "model/weights.json", "w/workload.json", "d/space.json", "--out", "s"]);
    let graph = fs::read_to_string(root.join("s/graph.csv")).unwrap();
    let mut lines = graph.lines();
    assert_eq!(lines.next(), Some("i,j,weight,corun_flag"));
    assert_eq!(lines.count(), 28);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("s/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "schedule");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    assert!(!root.join("s/INCOMPLETE").exists());
}

#[test]
fn oracle_scores_noiseless_data_without_error() {
    let tmp = setup();
    let root = tmp.path();
    let mut oracle: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("d/oracle.json")).unwrap()).unwrap();
    oracle["noise_sigma"] = 0.0.into();
    fs::write(root.join("clean.json"), oracle.to_string()).unwrap();
    ok(root, &["gen-data", "d/space.json", "clean.json", "--pairs", "4", "--test-pairs", "1", "--out", "clean"]);
    ok(root, &["eval-model", "model/weights.json", "clean", "--oracle-as-model", "clean.json", "--out", "e"]);
    let metrics = fs::read_to_string(root.join("e/metrics.csv")).unwrap();
    let mut rows = metrics.lines();
    assert_eq!(rows.next(), Some("split,n,mse,mae,max_abs_error,mare"));
    let cols: Vec<f64> = rows.next().unwrap().split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert!(cols[0] > 0.0);
    assert!(cols[1..].iter().all(|&v| v < 1e-12), "{metrics}");
}

#[test]
fn compare_reports_three_policies() {
    let tmp = setup();
    let root = tmp.path();
    ok(root, &["compare", "model/weights.json", "w/workload.json", "d/space.json", "d/oracle.json", "--oracle-as-model", "--out", "c"]);
    let totals = fs::read_to_string(root.join("c/totals.csv")).unwrap();
    for policy in ["naive-timeshare", "opt-timeshare", "coschedule"] {
        assert!(totals.contains(policy), "{totals}");
    }
    for name in ["policy_report.csv", "breakdown_caps.csv", "breakdown_allocation.csv", "estimation_error.csv"] {
        assert!(root.join("c").join(name).is_file(), "{name}");
    }
}

#[test]
fn out_dir_can_come_from_the_environment() {
    let tmp = setup();
    let status = Command::new(env!("CARGO_BIN_EXE_cosched"))
        .current_dir(tmp.path())
        .env("COSCHED_OUT_DIR", "from-env")
        .args(["gen-workload", "--size", "4"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(tmp.path().join("from-env/workload.json").is_file());
}

#[test]
fn failed_write_leaves_the_incomplete_marker() {
    let tmp = setup();
    let root = tmp.path();
    ok(root, &["gen-workload", "--size", "4", "--out", "x"]);
    assert!(root.join("x/manifest.json").is_file());
    fs::remove_file(root.join("x/workload.json")).unwrap();
    fs::create_dir(root.join("x/workload.json")).unwrap();
    err(root, &["gen-workload", "--size", "4", "--out", "x"]);
    assert!(!root.join("x/manifest.json").exists());
    let marker = fs::read_to_string(root.join("x/INCOMPLETE")).unwrap();
    assert!(marker.contains("workload.json"), "{marker}");
}
