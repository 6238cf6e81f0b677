use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mq"))
        .args(args)
        .env_remove("MQ_OUTPUT_DIR")
        .output()
        .expect("spawn mq")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = mq(args);
    assert!(
        out.status.success(),
        "mq {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn theory_table_starts_at_one() {
    let csv = stdout_ok(&["theory", "--c", "2", "--p", "56", "--k-max", "300", "-o", "-"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,tail,pmf"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 301);
    assert_eq!(rows[0][1], 1.0);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
    let expected = (1.0f64 - 1.0 / 56.0).powi(300);
    assert!((rows[300][1] - expected).abs() < 1e-12);
}

#[test]
fn quality_json_reports_quartiles() {
    let json = stdout_ok(&[
        "quality", "--c", "2", "--p", "8", "--n0", "10000", "--ops", "100000", "--format", "json", "-o", "-",
    ]);
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["total_deletes"], 50_000);
    assert_eq!(v["num_queues"], 16);
    let q = v["quartiles"].as_object().unwrap();
    let keys: Vec<&str> = q.keys().map(String::as_str).collect();
    for k in ["0", "25", "50", "75", "100"] {
        assert!(keys.contains(&k), "missing quartile {k}");
    }
    let vals: Vec<u64> = ["0", "25", "50", "75", "100"].iter().map(|k| q[*k].as_u64().unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[0] <= w[1]), "{vals:?}");
    assert!(v["mean"].as_f64().unwrap() > 0.0);
}

#[test]
fn identical_flags_give_identical_output() {
    let args = ["quality", "--p", "4", "--n0", "2000", "--ops", "20000", "--format", "json", "-o", "-"];
    assert_eq!(stdout_ok(&args), stdout_ok(&args));
    let other_seed = stdout_ok(&[
        "quality", "--p", "4", "--n0", "2000", "--ops", "20000", "--seed", "7", "--format", "json", "-o", "-",
    ]);
    assert_ne!(stdout_ok(&args), other_seed);
    let theory = ["theory", "--format", "json", "-o", "-"];
    assert_eq!(stdout_ok(&theory), stdout_ok(&theory));
}

#[test]
fn bench_emits_a_csv_row() {
    let csv = stdout_ok(&["bench", "--p", "1", "--n0", "1000", "--duration-ms", "100", "-o", "-"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("p,c,num_queues,n0,mode,ops,seconds,ops_per_sec,failed_locks"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[4], "uniform");
    assert!(row[5].parse::<u64>().unwrap() > 0);
    assert!(lines.next().is_none());
}

#[test]
fn size_sweep_emits_one_row_per_size() {
    let csv = stdout_ok(&[
        "bench", "--mode", "size-sweep", "--sizes", "1,100,10000", "--duration-ms", "20", "-o", "-",
    ]);
    let n0s: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(n0s, ["1", "100", "10000"]);
}

#[test]
fn verify_succeeds_and_reports_conservation() {
    let out = mq(&["verify", "--p", "2", "--n0", "100", "--duration-ms", "100", "--mode", "monotonic", "-o", "-"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("conservation ok"));
}

#[test]
fn bad_arguments_fail() {
    for args in [
        &["bench", "--p", "0"][..],
        &["bench", "--c", "-1"],
        &["bench", "--d", "1"],
        &["bench", "--mode", "sideways"],
        &["quality", "--ops", "0"],
        &["theory", "--p", "1", "--c", "1"],
        &["nonsense"],
    ] {
        let out = mq(args);
        assert!(!out.status.success(), "mq {args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn recorded_log_replays_to_the_same_summary() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("ops.log");
    let log = log.to_str().unwrap();
    let recorded = stdout_ok(&[
        "quality", "--p", "2", "--threads", "2", "--n0", "1000", "--ops", "10000", "--log-out", log, "--format",
        "json", "-o", "-",
    ]);
    let replayed = stdout_ok(&["quality", "--replay", log, "--format", "json", "-o", "-"]);
    let (a, b): (Value, Value) = (serde_json::from_str(&recorded).unwrap(), serde_json::from_str(&replayed).unwrap());
    assert_eq!(a["total_deletes"], 5_000);
    assert_eq!(a["quartiles"], b["quartiles"]);
    assert_eq!(a["mean"], b["mean"]);
}

#[test]
fn multi_socket_logs_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("ms.log");
    std::fs::write(&log, "# multi_socket=1\n0,0,I,5,0\n1,0,D,5,0\n").unwrap();
    let log = log.to_str().unwrap();
    assert!(!mq(&["quality", "--replay", log, "-o", "-"]).status.success());
    let json = stdout_ok(&["quality", "--replay", log, "--force", "--format", "json", "-o", "-"]);
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["total_deletes"], 1);
}

#[test]
fn output_dir_receives_default_file_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mq"))
        .args(["theory", "--k-max", "5"])
        .env("MQ_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let written = std::fs::read_to_string(Path::new(dir.path()).join("theory.csv")).unwrap();
    assert_eq!(written.lines().count(), 7);
}
