use std::process::{Command, Output};

use serde_json::Value;

fn menger(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_menger"))
        .args(args)
        .env_remove("MENGER_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const ENERGY: [&str; 14] = [
    "energy",
    "--n",
    "1",
    "--s",
    "0.5",
    "--p",
    "2",
    "--fn",
    "quadratic",
    "--domain",
    "0,1",
    "--samples",
    "1e5",
    "--seed",
];

#[test]
fn energy_echoes_the_derived_exponent() {
    let mut args = ENERGY.to_vec();
    args.push("42");
    let v = json(&menger(&args));
    assert_eq!(v["command"], "energy");
    assert_eq!(v["config"]["q"].as_f64(), Some(7.0 / 3.0));
    assert_eq!(v["config"]["samples"], 100_000);
    assert_eq!(v["seed"], 42);
    assert!(v["value"].as_f64().unwrap() > 0.0 && v["stderr"].as_f64().unwrap() > 0.0);
}

#[test]
fn a_mismatched_exponent_is_a_validation_error() {
    let mut args = ENERGY.to_vec();
    args.extend(["1", "--q", "2.3"]);
    let out = menger(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("derived exponent"));
}

#[test]
fn keys_foreign_to_a_command_are_rejected() {
    let out = menger(&["knot", "--vertices", "64", "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn affine_functions_have_zero_seminorm() {
    let v = json(&menger(&[
        "seminorm", "--n", "1", "--s", "0.5", "--p", "2", "--fn", "affine", "--domain", "0,1",
    ]));
    assert_eq!(v["value"].as_f64(), Some(0.0));
}

#[test]
fn the_config_echo_reproduces_the_run() {
    let mut args = ENERGY.to_vec();
    args.push("9");
    let first = json(&menger(&args));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, toml::to_string(&first["config"]).unwrap()).unwrap();
    let second = json(&menger(&["energy", "--config", path.to_str().unwrap()]));
    assert_eq!(first, second);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "n = 1\ns = 0.5\np = 2\nfn = \"quadratic\"\ndomain = \"0,1\"\nsamples = 1e4\nseed = 1\n",
    )
    .unwrap();
    let v = json(&menger(&["energy", "--config", path.to_str().unwrap(), "--seed", "5"]));
    assert_eq!(v["seed"], 5);
    assert_eq!(v["config"]["seed"], 5);
    std::fs::write(&path, "n = 1\nbogus = 3\n").unwrap();
    let out = menger(&["energy", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_does_not_depend_on_the_thread_count() {
    let run = |t: &str| {
        let mut args = ENERGY.to_vec();
        args.extend(["3", "--threads", t]);
        menger(&args).stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("4"));
    assert_eq!(one, run("8"));
}

#[test]
fn equivalence_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = [
        "verify",
        "equivalence",
        "--catalog",
        "default",
        "--n",
        "1",
        "--s",
        "0.5",
        "--p",
        "3",
        "--samples",
        "2e4",
        "--out",
        d,
        "--format",
        "both",
    ];
    let out = menger(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify-equivalence.json")).unwrap()).unwrap();
    assert_eq!(v["report"]["rows"].as_array().unwrap().len(), 4);
    let csv = std::fs::read_to_string(dir.path().join("verify-equivalence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("name,numerator,"));

    let summary = menger(&["report", dir.path().join("verify-equivalence.json").to_str().unwrap()]);
    assert!(summary.status.success());
    assert!(String::from_utf8_lossy(&summary.stdout).contains("verify equivalence"));
}

#[test]
fn knots_report_all_three_energies() {
    let v = json(&menger(&[
        "knot",
        "--curve",
        "circle",
        "--vertices",
        "64",
        "--energy",
        "up",
    ]));
    let names: Vec<&str> = v["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["name"].as_str().unwrap())
        .collect();
    assert!(["mp", "ip", "up"].iter().all(|n| names.contains(n)));
    let up = v["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .find(|d| d["name"] == "up")
        .unwrap();
    assert_eq!(up["value"], v["value"]);
}

#[test]
fn missing_files_are_io_errors() {
    let out = menger(&["report", "/nonexistent/result.json"]);
    assert_eq!(out.status.code(), Some(1));
}
