//! End-to-end tests of the qfe binary: exit codes, file outputs, and the
//! tiny-scale pipeline gen-data -> train -> predict/certify.

use std::path::Path;
use std::process::{Command, Output};

fn qfe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn select_ghz_k1_picks_zzz() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfe(&[
        "select",
        "--target",
        "ghz",
        "--n",
        "3",
        "--k",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("ZZZ"), "{text}");
    assert!(dir.path().join("ghz3.plan.json").exists());
    let report = std::fs::read_to_string(dir.path().join("ghz3.select-report.csv")).unwrap();
    assert!(report.starts_with("round,setting,captured_weight"));
}

#[test]
fn select_bell_reports_the_reference_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfe(&[
        "select",
        "--target",
        "bell",
        "--k",
        "7",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = std::fs::read_to_string(dir.path().join("bell2.select-report.csv")).unwrap();
    // The published Bell row rides along for comparison.
    for setting in ["YZ", "ZY", "ZX"] {
        assert!(report.contains(setting), "{report}");
    }
}

#[test]
fn invalid_k_exits_2_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfe(&[
        "select",
        "--target",
        "bell",
        "--k",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unknown_target_exits_2() {
    let out = qfe(&["select", "--target", "nosuch", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

fn tiny_dataset(dir: &Path, name: &str, k: &str, seed: &str) {
    let out = qfe(&[
        "gen-data",
        "--target",
        "bell",
        "--k",
        k,
        "--binning",
        "l66",
        "--per-label-train",
        "10",
        "--per-label-val",
        "5",
        "--shots",
        "2000",
        "--seed",
        seed,
        "--name",
        name,
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn pipeline_runs_at_tiny_scale() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    tiny_dataset(&data, "tiny", "3", "11");

    let models = dir.path().join("models");
    let out = qfe(&[
        "train",
        "--data-dir",
        data.to_str().unwrap(),
        "--data-name",
        "tiny",
        "--registry",
        "--k-min",
        "2",
        "--k-max",
        "3",
        "--epochs",
        "4",
        "--hidden",
        "24",
        "--out",
        models.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let registry = models.join("tiny-registry");
    assert!(registry.join("registry.json").exists());
    assert!(registry.join("k2.model.json").exists());
    assert!(registry.join("k3.calib.json").exists());

    let out = qfe(&[
        "predict",
        "--registry",
        registry.to_str().unwrap(),
        "--true-f",
        "0.9",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("F~ ="));

    let certdir = dir.path().join("cert");
    let out = qfe(&[
        "certify",
        "--registry",
        registry.to_str().unwrap(),
        "--true-f",
        "0.5",
        "--threshold",
        "0.96",
        "--out",
        certdir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("verdict:"), "{text}");
    let transcript = std::fs::read_to_string(certdir.join("certify.transcript.jsonl")).unwrap();
    assert!(transcript.lines().count() >= 1);
}

#[test]
fn mismatched_model_and_dataset_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    tiny_dataset(&data, "first", "3", "21");
    tiny_dataset(&data, "second", "2", "22");

    let models = dir.path().join("models");
    let out = qfe(&[
        "train",
        "--data-dir",
        data.to_str().unwrap(),
        "--data-name",
        "first",
        "--k",
        "3",
        "--epochs",
        "3",
        "--hidden",
        "16",
        "--out",
        models.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let out = qfe(&[
        "calibrate",
        "--data-dir",
        data.to_str().unwrap(),
        "--data-name",
        "second",
        "--model",
        models.join("first.k3.model.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn outputs_are_never_silently_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    tiny_dataset(&data, "guard", "2", "31");
    let out = qfe(&[
        "gen-data",
        "--target",
        "bell",
        "--k",
        "2",
        "--binning",
        "l66",
        "--per-label-train",
        "10",
        "--per-label-val",
        "5",
        "--name",
        "guard",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--force"), "{err}");
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "target = \"bell\"\nk = 7\n").unwrap();
    let out = qfe(&[
        "select",
        "--config",
        config.to_str().unwrap(),
        "--k",
        "2",
        "--out",
        dir.path().join("sel").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    // Flag wins over the file's k = 7.
    let plan = std::fs::read_to_string(dir.path().join("sel/bell2.plan.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&plan).unwrap();
    assert_eq!(parsed["settings"].as_array().unwrap().len(), 2);
}

#[test]
fn baseline_constants() {
    let out = qfe(&["baseline", "--method", "qst", "--n", "7"]);
    assert!(stdout(&out).contains("2187"));
    let out = qfe(&["baseline", "--method", "dfe", "--epsilon", "0.01", "--delta", "0.05"]);
    assert!(stdout(&out).contains("1600000"));
}
