use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use teachlab::harness::{read_curves, read_summary, read_teachers, ExperimentConfig};

fn teachlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teachlab")).args(args).output().expect("binary runs")
}

fn tiny_config(dir: &Path) -> String {
    let mut cfg = ExperimentConfig::preset("gridworld-10").unwrap();
    cfg.teacher.pretrain_episodes = 200;
    cfg.trials = 3;
    cfg.episodes = 10;
    cfg.horizon = 5;
    cfg.teaching_sessions = 2;
    let path = dir.join("config.json");
    fs::write(&path, cfg.to_json().unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn experiment_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    let run = teachlab(&["experiment", "--config", &config, "--out", out_s]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = read_summary(&out.join("summary.json")).unwrap();
    assert_eq!(summary.methods.len(), 7);
    assert_eq!(summary.methods[0].method, "no_advice");
    assert_eq!(read_curves(&out.join("curves.csv")).unwrap().len(), 7 * 3 * 10);
    assert_eq!(read_teachers(&out.join("teachers.csv")).unwrap().len(), 1);
    assert!(out.join("teacher_q_learning.json").exists());

    let report = teachlab(&["report", "--out", out_s]);
    assert!(report.status.success());
    let text = String::from_utf8(report.stdout).unwrap();
    assert!(text.contains("early"), "{text}");
    assert_eq!(text, String::from_utf8(run.stdout).unwrap());
}

#[test]
fn teach_single_policy() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out = dir.path().join("teach");
    let run = teachlab(&["teach", "--config", &config, "--policy", "importance", "--threshold", "10", "--budget", "30", "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("session.json").exists());
    let rows = read_curves(&out.join("curves.csv")).unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.method == "importance_t10"));
    assert!(rows.iter().all(|r| r.b_t <= 30));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = teachlab(&["experiment", "--env", "no-such-maze", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    let zero = teachlab(&["experiment", "--trials", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(zero.status.code(), Some(2));
    let missing = teachlab(&["report", "--out", dir.path().join("absent").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(4));
}
