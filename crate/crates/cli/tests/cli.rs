use std::path::PathBuf;
use std::process::{Command, Output};

fn experiments() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../experiments")
}

fn potential(name: &str) -> String {
    experiments().join("potentials").join(name).display().to_string()
}

fn scaling(name: &str) -> String {
    experiments().join("scalings").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_threshold-lab")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn resonance_prints_half_bound_state() {
    let out = run(&["resonance", "--potential", &potential("shifted_well.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["theta"].as_f64().unwrap() + 1.0).abs() < 1e-8);
    assert!((v["u0"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-8);
    assert!(v["du0"].is_f64() && v["mismatch"].is_f64());
}

#[test]
fn non_resonant_potential_fails() {
    let out = run(&["resonance", "--potential", &potential("unit_well.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tune_finds_first_resonant_depth() {
    let out = run(&["tune", "--potential", &potential("unit_well.json"), "--lo", "5", "--hi", "15"]);
    assert_eq!(out.status.code(), Some(0));
    let gamma = stdout_json(&out)["gamma"].as_f64().unwrap();
    assert!((gamma - std::f64::consts::PI.powi(2)).abs() < 1e-8);
}

#[test]
fn spectrum_lists_eigenvalues() {
    let out = run(&[
        "spectrum",
        "--V",
        &potential("box.json"),
        "--scaling",
        &scaling("const.json"),
        "--lambda",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 1);
}

#[test]
fn predict_flags_positive_perturbation() {
    let ok = run(&["predict", "--V", &potential("box.json"), "--scaling", &scaling("const.json")]);
    assert_eq!(ok.status.code(), Some(0));
    assert!((stdout_json(&ok)["k"].as_f64().unwrap().abs() - 0.5).abs() < 1e-12);

    let bad = run(&["predict", "--V", &potential("box_positive.json"), "--scaling", &scaling("const.json")]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout_json(&bad)["conditions"].is_object());
}

#[test]
fn quasimode_reports_certificate_data() {
    let out = run(&[
        "quasimode",
        "--case",
        "t3",
        "--U",
        &potential("shifted_well.json"),
        "--V",
        &potential("linear.json"),
        "--scaling",
        &scaling("power_m1_4.json"),
        "--lambda",
        "1e-4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    for key in ["omega", "k_lambda", "norm", "residual", "accuracy_ratio", "junction_errors"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
}

#[test]
fn sweep_writes_csv_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let config = experiments().join("t1_const.json");
    let out = run(&["sweep", "--config", config.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("lambda,alpha,e_measured,e_predicted,ratio,omega,residual_ratio,status"));
    assert_eq!(stdout_json(&out)["verdict"], "pass");
}

#[test]
fn verify_exit_code_tracks_verdict() {
    let pass = run(&["verify", "--config", experiments().join("t4.json").to_str().unwrap()]);
    assert_eq!(pass.status.code(), Some(0));
    let fail = run(&["verify", "--config", experiments().join("t2.json").to_str().unwrap()]);
    assert_eq!(fail.status.code(), Some(1));
    assert_eq!(stdout_json(&fail)["verdict"], "fail");
}

#[test]
fn malformed_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "not json").unwrap();
    let out = run(&["sweep", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let missing = run(&["spectrum", "--lambda", "1"]);
    assert_eq!(missing.status.code(), Some(2));
}
