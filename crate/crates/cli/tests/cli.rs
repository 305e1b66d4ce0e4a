//! The binary's exit codes, configuration handling and outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use topicstream_core::runner::read_topics;

fn topicstream(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topicstream")).args(args).env_remove("TOPICSTREAM_MODEL_DIR").output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small synthetic stream: 2 topics over 2 windows.
fn small_stream(dir: &Path) {
    let out = topicstream(&["synth", "--out", s(dir), "--topics", "2", "--windows", "2", "--posts-per-topic", "20", "--background-docs", "500"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn help_and_version_succeed_and_bad_arguments_are_usage_errors() {
    assert_eq!(code(&topicstream(&["--help"])), 0);
    assert_eq!(code(&topicstream(&["--version"])), 0);
    assert_eq!(code(&topicstream(&["frobnicate"])), 1);
    assert_eq!(code(&topicstream(&["detect", "--method", "NOPE"])), 1);
}

#[test]
fn missing_models_fail_before_reading_posts() {
    let out = topicstream(&["detect", "--method", "SGJP", "--posts", "/does/not/exist.jsonl", "--out", "/tmp/never.jsonl"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("background model directory"), "{}", stderr(&out));
}

#[test]
fn unreadable_input_is_a_data_error() {
    let out = topicstream(&["detect", "--method", "CATT", "--posts", "/does/not/exist.jsonl", "--out", "/tmp/never.jsonl"]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    // the cause is reported once
    assert_eq!(msg.matches("No such file").count(), 1, "{msg}");
}

#[test]
fn config_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "method = CATT\ncolour = red\n").unwrap();
    let out = topicstream(&["detect", "--config", s(&conf)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("run.conf:2: unknown key"), "{}", stderr(&out));

    fs::write(&conf, "method = CATT\nposts = p.jsonl\nout = t.jsonl\nparam.damp = 0.1:0.1:1\n").unwrap();
    let out = topicstream(&["detect", "--config", s(&conf)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("ranges are for sweep"), "{}", stderr(&out));

    let out = topicstream(&["detect", "--config", s(&conf), "--set", "param.nonsense=1"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn command_line_overrides_config_and_params_reach_the_header() {
    let dir = tempfile::tempdir().unwrap();
    small_stream(dir.path());
    let topics = dir.path().join("catt.jsonl");
    let out = topicstream(&["detect", "--config", s(&dir.path().join("run.conf")), "--method", "catt", "--set", "param.damp=0.25", "--out", s(&topics)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (header, records) = read_topics(&topics).unwrap();
    assert_eq!(header.method, "CATT");
    assert_eq!(header.params.get("damp"), Some(&0.25));
    assert_eq!(records.len(), 2);
}

#[test]
fn empty_stream_writes_a_header_only_file() {
    let dir = tempfile::tempdir().unwrap();
    let posts = dir.path().join("empty.jsonl");
    fs::write(&posts, "").unwrap();
    let topics = dir.path().join("t.jsonl");
    let out = topicstream(&["detect", "--method", "DSFG", "--posts", s(&posts), "--out", s(&topics)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (_, records) = read_topics(&topics).unwrap();
    assert!(records.is_empty());
    assert_eq!(fs::read_to_string(&topics).unwrap().lines().count(), 1);
}

#[test]
fn eval_writes_metrics_and_rejects_bad_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    small_stream(dir.path());
    let d = dir.path();
    let topics = d.join("t.jsonl");
    assert_eq!(code(&topicstream(&["detect", "--config", s(&d.join("run.conf")), "--method", "FHKN", "--out", s(&topics)])), 0);
    let metrics = d.join("m.json");
    let (golden_file, catalog_file) = (d.join("golden.jsonl"), d.join("catalog.jsonl"));
    let golden = ["--golden", s(&golden_file), "--catalog", s(&catalog_file)];
    let mut args = vec!["eval", "--topics", s(&topics), "--out", s(&metrics)];
    args.extend(golden);
    let out = topicstream(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(v["method"], "FHKN");
    assert!(v["prf"]["recall"].as_f64().unwrap() > 0.99);
    assert_eq!(v["windows"].as_array().unwrap().len(), 2);

    args.extend(["--threshold", "1.5"]);
    assert_eq!(code(&topicstream(&args)), 1);
}

#[test]
fn sweep_writes_a_row_per_setting_and_the_best_config() {
    let dir = tempfile::tempdir().unwrap();
    small_stream(dir.path());
    let d = dir.path();
    let (csv, best) = (d.join("sweep.csv"), d.join("best.conf"));
    let out = topicstream(&[
        "sweep",
        "--config",
        s(&d.join("run.conf")),
        "--method",
        "WVOP",
        "--set",
        "param.min_pts=3:2:7",
        "--set",
        "criterion=mean-fs",
        "--out",
        s(&csv),
        "--best",
        s(&best),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows: Vec<String> = fs::read_to_string(&csv).unwrap().lines().map(String::from).collect();
    assert_eq!(rows[0], "min_pts,criterion,value");
    assert_eq!(rows.len(), 4);
    let best = fs::read_to_string(&best).unwrap();
    assert!(best.lines().any(|l| l.starts_with("param.min_pts = ")), "{best}");
    assert!(!best.contains(':'), "{best}");

    // the best config runs as is
    let topics = d.join("best.jsonl");
    let out = topicstream(&["detect", "--config", s(&d.join("best.conf")), "--out", s(&topics)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn mean_fs_sweep_needs_a_golden_standard() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "method = CATT\nposts = p.jsonl\ncriterion = mean-fs\nparam.damp = 0.1:0.1:1\n").unwrap();
    let out = topicstream(&["sweep", "--config", s(&conf)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("golden"), "{}", stderr(&out));
}
