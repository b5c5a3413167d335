use std::fs;
use std::path::Path;

use tendonhand_cli::{run, EXIT_CHECK_FAILED, EXIT_OK, EXIT_OPTIMIZATION, EXIT_PARSE, EXIT_USAGE, EXIT_VALIDATION};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("tendonhand").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn check_passes_on_the_built_in_hand() {
    let (code, out, _) = call(&["check"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("max |net| < 84 N·mm: PASS"), "{out}");
}

#[test]
fn zero_stiction_fails_the_check() {
    let (code, out, err) = call(&["check", "--stiction", "0", "--samples", "50"]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(out.contains("FAIL"));
    assert!(err.starts_with("error:"));
}

#[test]
fn classify_lists_every_tendon() {
    let (code, out, _) = call(&["classify"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.matches("TA+MJT").count(), 3);
    assert_eq!(out.matches("SA+MTS").count(), 2);
}

#[test]
fn exported_design_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hand.toml");
    let path = path.to_str().unwrap();
    assert_eq!(call(&["export-default", "--out", path]).0, EXIT_OK);
    let (_, stdout_copy, _) = call(&["export-default"]);
    assert_eq!(fs::read_to_string(path).unwrap(), stdout_copy);
    let (code, out, _) = call(&["validate", "--design", path]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("valid: 8 joints, 5 tendons"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = dir.path().to_str().unwrap();
        let sim = ["simulate", "--out", out, "--samples", "40", "--contact", "F1P@0.5=0.3"];
        assert_eq!(call(&sim).0, EXIT_OK);
        assert_eq!(call(&["profile", "--out", out, "--samples", "80"]).0, EXIT_OK);
    }
    for name in ["trace.csv", "events.csv", "torque_profile.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn simulate_reports_the_stall_and_the_contact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, text, _) = call(&["simulate", "--out", out, "--contact", "F1P@0.5=0.3"]);
    assert_eq!(code, EXIT_OK);
    assert!(text.contains("motor stalls"), "{text}");
    let events = fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert!(events.contains("contact-activated,F1P"));
}

#[test]
fn select_springs_writes_a_passing_design() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, _) = call(&[
        "select-springs",
        "--out",
        out,
        "--samples",
        "100",
        "--catalog",
        &data("spring_catalog.toml"),
    ]);
    assert_eq!(code, EXIT_OK);
    let design = dir.path().join("design.toml");
    let (code, out, _) = call(&["check", "--design", design.to_str().unwrap(), "--samples", "100"]);
    assert_eq!(code, EXIT_OK, "{out}");
    let report = fs::read_to_string(dir.path().join("spring_selection.csv")).unwrap();
    assert_eq!(report.lines().count(), 2);
}

#[test]
fn optimize_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let problem = data("planted_problem.toml");
    let (code, text, err) = call(&["optimize", "--problem", &problem, "--out", out, "--budget", "400"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(text.contains("400 evaluations"), "{text}");
    for name in [
        "optimized_design.toml",
        "restarts.csv",
        "residuals.csv",
        "history.csv",
        "parameters.csv",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let history = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 401);

    let (code, _, _) = call(&["optimize", "--problem", &problem, "--out", out, "--budget", "5"]);
    assert_eq!(code, EXIT_OPTIMIZATION);
}

#[test]
fn malformed_and_invalid_files_map_to_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "joints = [").unwrap();
    let (code, _, err) = call(&["validate", "--design", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.contains("bad.toml:1:"), "{err}");

    let text = fs::read_to_string(data("iss_hand.toml")).unwrap();
    let invalid = dir.path().join("invalid.toml");
    fs::write(&invalid, text.replacen("radius = ", "radius = -", 1)).unwrap();
    let (code, out, _) = call(&["validate", "--design", invalid.to_str().unwrap()]);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(out.contains("motor.radius"), "{out}");
}

#[test]
fn bad_arguments_are_usage_errors() {
    assert_eq!(call(&["simulate", "--contact", "F1P"]).0, EXIT_USAGE);
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(call(&["check", "--samples", "1"]).0, EXIT_USAGE);
    assert_eq!(call(&["simulate", "--contact", "NOPE@1=0.2"]).0, EXIT_VALIDATION);
    assert_eq!(call(&["--help"]).0, EXIT_OK);
}
