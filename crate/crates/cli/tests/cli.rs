use std::path::Path;
use std::process::{Command, Output};

fn dyad(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyad"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn dyad")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(&path, r#"{"pairs": 1, "script": {"trial_duration_s": 30.0, "choices_per_trial": 4}}"#).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn generate_path_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = ok(&dyad(&["generate-path", "--seed", "5"], dir.path()));
    let b = ok(&dyad(&["generate-path", "--seed", "5"], dir.path()));
    let c = ok(&dyad(&["generate-path", "--seed", "6"], dir.path()));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(v["segments"].as_array().is_some_and(|c| !c.is_empty()));
}

#[test]
fn run_trial_replays_a_saved_script() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    ok(&dyad(&["generate-path", "--config", &cfg, "--seed", "2", "--out", "p.json"], dir.path()));
    let first = ok(&dyad(
        &["run-trial", "--config", &cfg, "--seed", "2", "--condition", "HRP", "--script", "p.json", "--out", "a"],
        dir.path(),
    ));
    let second = ok(&dyad(
        &["run-trial", "--config", &cfg, "--seed", "2", "--condition", "HRP", "--script", "p.json", "--out", "b"],
        dir.path(),
    ));
    assert!(first.lines().count() > 1);
    assert_eq!(first.replace("a/", ""), second.replace("b/", ""));
    let la = std::fs::read(dir.path().join("a/hrp_2.jsonl")).unwrap();
    let lb = std::fs::read(dir.path().join("b/hrp_2.jsonl")).unwrap();
    assert_eq!(la, lb);
}

#[test]
fn experiment_then_analyze_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = ok(&dyad(
        &["run-experiment", "--config", &cfg, "--out", "exp", "--decimate", "10"],
        dir.path(),
    ));
    assert!(run.contains("HFOP"));
    let exp = dir.path().join("exp");
    let before = std::fs::read_to_string(exp.join("report.json")).unwrap();
    ok(&dyad(&["analyze", "exp", "--config", &cfg, "--out", "again"], dir.path()));
    let after = std::fs::read_to_string(dir.path().join("again/report.json")).unwrap();
    assert_eq!(before, after);

    let csv = ok(&dyad(&["predict", "exp", "--condition", "HFOP", "--out", "pred"], dir.path()));
    assert!(csv.starts_with("name,"));
    assert_eq!(csv, std::fs::read_to_string(dir.path().join("pred/predictors.csv")).unwrap());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"pairz": 3}"#).unwrap();
    let out = dyad(&["generate-path", "--config", "bad.json"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("pairz"));
}

#[test]
fn empty_directories_are_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!dyad(&["analyze", "."], dir.path()).status.success());
    assert!(!dyad(&["predict", "."], dir.path()).status.success());
}
