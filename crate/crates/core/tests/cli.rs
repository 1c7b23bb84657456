use std::path::Path;
use std::process::{Command, Output};

use acflow::cli::{run_verify, RunConfig, RunReport};
use proptest::prelude::*;

fn acflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const E3D: &str = r#"{"target": "E3D_SOL5", "grid": {"n": [7, 7, 7], "lo": [-1, -1, -1], "hi": [1, 1, 1]}}"#;

#[test]
fn verify_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", E3D);
    let out = acflow(
        &["verify", &cfg, "-o", "r.json", "--csv", "r.csv", "--seed", "9"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = RunReport::from_json(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r.config.seed, 9);
    assert_eq!(r.command, "verify");
    assert!(r.pass && r.checks.iter().all(|c| c.pass));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.starts_with("check,n,h,linf,order"));
    assert_eq!(csv.lines().count(), 1 + r.checks.len());
}

#[test]
fn tolerance_override_flips_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"target": "E2D_LINEAR_P", "grid": {"n": [9, 9], "lo": [-1, -1], "hi": [1, 1]},
            "checks": ["euler"], "path": {"kind": "sampled", "accuracy": 2, "delta": 1e-4}}"#,
    );
    let out = acflow(&["verify", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = acflow(&["verify", &cfg, "--tol", "euler=1e3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_errors_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        "{\"target\": \"E2D_ISOBARIC\",\n  \"grid\": {\"n\": [9, 9],}\n}",
    );
    let out = acflow(&["verify", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let cfg = write(
        dir.path(),
        "unknown.json",
        r#"{"target": "E2D_ISOBARIC", "grid": {"n": [9, 9], "lo": [-1, -1], "hi": [1, 1]}, "checks": ["euler", "vorticity"]}"#,
    );
    let out = acflow(&["verify", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checks[1]"));
}

#[test]
fn list_shows_every_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = acflow(&["list", "--json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["id"].as_str().unwrap())
        .collect();
    for id in [
        "E2D_ISOBARIC",
        "NS3D_IVP",
        "fourwell-four-phase",
        "leray-random",
        "sigma-family",
    ] {
        assert!(ids.contains(&id), "{id}");
    }
}

#[test]
fn converge_reports_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"target": "scalar-tanh", "grid": {"n": [9, 9], "lo": [-2, -2], "hi": [2, 2]},
            "checks": ["ac"], "accuracy": 4, "refinement": [17, 33, 65]}"#,
    );
    let out = acflow(&["converge", &cfg, "--csv", "c.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = RunReport::from_json(&String::from_utf8_lossy(&out.stdout)).unwrap();
    let slope = r.convergence[0].outcome.slope().unwrap();
    assert!((slope - 4.0).abs() <= 0.3, "{slope}");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("c.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );
}

fn without_time(r: &RunReport) -> String {
    let mut v = serde_json::to_value(r).unwrap();
    v.as_object_mut().unwrap().remove("wall_time_s");
    serde_json::to_string(&v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn same_seed_same_report(seed in any::<u64>(), target in prop::sample::select(vec!["E2D_ISOBARIC", "E3D_SOL4", "leray-random"])) {
        let grid = match target {
            "E2D_ISOBARIC" => r#"{"n": [9, 9], "lo": [-1, -1], "hi": [1, 1]}"#,
            "E3D_SOL4" => r#"{"n": [5, 5, 5], "lo": [-1, -1, -1], "hi": [1, 1, 1]}"#,
            _ => r#"{"n": [16, 16], "lo": [0, 0], "hi": [6.283185307179586, 6.283185307179586], "periodic": [true, true]}"#,
        };
        let params = if target == "leray-random" { r#"{"count": 2, "kmax": 3}"# } else { "null" };
        let text = format!(r#"{{"target": "{target}", "grid": {grid}, "params": {params}, "seed": {seed}}}"#);
        let cfg = RunConfig::from_json(&text).unwrap();
        let a = run_verify(&cfg).unwrap();
        let b = run_verify(&cfg).unwrap();
        prop_assert_eq!(without_time(&a), without_time(&b));
        // pass iff every check is within its tolerance
        prop_assert_eq!(a.pass, a.checks.iter().all(|c| c.value <= c.tol));
        let back = RunReport::from_json(&a.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, a);
    }
}
