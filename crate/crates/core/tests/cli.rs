use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_smess");

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn smess(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().expect("run smess");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn build_writes_model_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout) = smess(&["build", "--scenario", &data("ieee33.json"), "--out", out]);
    assert_eq!(code, 0);
    assert!(stdout.contains("constraints"));
    assert!(!stdout.contains("MISMATCH"));
    assert!(dir.path().join("model.mps").exists());
    assert!(dir.path().join("counts.json").exists());
}

#[test]
fn case3_build_emits_bundle_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _) = smess(&["build", "--scenario", &data("tiny/t4-mixed.json"), "--case", "case3", "--out", out]);
    assert_eq!(code, 0);
    let mps = std::fs::read_to_string(dir.path().join("model.mps")).unwrap();
    assert!(mps.contains("case3-bundle"));
}

#[test]
fn solve_then_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let scenario = data("tiny/t1-line.json");
    let (code, stdout) = smess(&["solve", "--scenario", &scenario, "--gap", "0", "--out", out]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("status optimal"));
    let schedule = dir.path().join("schedule.json");
    let vdir = dir.path().join("v");
    let (code, stdout) = smess(&["validate", "--scenario", &scenario, "--schedule", schedule.to_str().unwrap(), "--out", vdir.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains(" 0 violations"));
    assert!(vdir.join("series.tsv").exists());

    let mut sched: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&schedule).unwrap()).unwrap();
    sched["modules"][0]["soc"][0] = serde_json::json!(0.5);
    std::fs::write(&schedule, sched.to_string()).unwrap();
    let (code, stdout) = smess(&["validate", "--scenario", &scenario, "--schedule", schedule.to_str().unwrap(), "--out", vdir.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.contains("5e"));
}

#[test]
fn compare_single_case_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout) = smess(&["compare", "--scenario", &data("tiny/t2-tie.json"), "--case", "case5", "--out", out]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 2);
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(smess(&["build", "--scenario", "/nonexistent.json"]).0, 2);
    assert_eq!(smess(&["solve", "--scenario", &data("tiny/t1-line.json"), "--gap", "2"]).0, 2);
    assert_eq!(smess(&["build", "--scenario", &data("tiny/t1-line.json"), "--disk-segments", "5"]).0, 2);
    assert_eq!(smess(&["solve", "--bogus"]).0, 2);
}

#[test]
fn broken_backend_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["solve", "--scenario", &data("tiny/t1-line.json"), "--backend", "cbc", "--out", dir.path().to_str().unwrap()])
        .env("SMESS_CBC", "/bin/false")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
