use std::path::PathBuf;
use std::process::{Command, Output};

use foliation_verify::{Report, Status};

fn verify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(args)
        .env_remove("VERIFY_SEED")
        .output()
        .expect("spawn verify")
}

fn scratch_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("verify-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn json_report(out: &Output) -> Report {
    Report::from_json(std::str::from_utf8(&out.stdout).unwrap()).expect("parse report")
}

#[test]
fn schwarzian_seed_7_order_10_passes() {
    let out = verify(&["schwarzian", "--seed", "7", "--order", "10", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_report(&out);
    assert!(!r.checks.is_empty());
    assert!(r.checks.iter().all(|c| c.status == Status::Pass));
    assert_eq!(r.scenario.order, 10);
}

#[test]
fn isotropy_two_hundred_trials_all_trivial() {
    let out = verify(&["isotropy", "--seed", "11", "--dim", "2", "--trials", "200", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_report(&out);
    let trivial = r.checks.iter().find(|c| c.name == "isotropy/trivial").unwrap();
    assert_eq!(trivial.status, Status::Pass);
    assert!(trivial.verdict.starts_with("200/200"), "{}", trivial.verdict);
}

#[test]
fn unknown_suite_lists_valid_names() {
    let out = verify(&["bogus", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["jets", "pfaffian", "schwarzian", "projective", "isotropy", "maurer-cartan", "prolong-structure", "all"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn out_of_range_parameters_are_rejected() {
    for args in [["--order", "17"], ["--dim", "5"], ["--trials", "10001"]] {
        let mut full = vec!["jets", "--seed", "1"];
        full.extend(args);
        let out = verify(&full);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("out of range"));
    }
}

#[test]
fn seed_is_required() {
    let out = verify(&["jets"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_falls_back_to_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(["schwarzian", "--format", "json"])
        .env("VERIFY_SEED", "19")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_report(&out).seed, 19);

    let out = Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(["schwarzian", "--seed", "4", "--format", "json"])
        .env("VERIFY_SEED", "19")
        .output()
        .unwrap();
    assert_eq!(json_report(&out).seed, 4);
}

#[test]
fn json_report_round_trips() {
    let path = scratch_file("round-trip.json", "");
    let out = verify(&["projective", "--seed", "3", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let r = Report::from_json(&text).unwrap();
    assert_eq!(r.to_json(), text);
    assert_eq!(r.totals.pass + r.totals.fail + r.totals.skip, r.checks.len());
    assert!(r.checks.windows(2).all(|w| w[0].name < w[1].name));
}

#[test]
fn partial_scenario_file_gets_defaults_and_flags_override() {
    let path = scratch_file("partial.json", r#"{"suite": "jets", "seed": 5, "order": 7}"#);
    let out = verify(&["--scenario", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_report(&out);
    assert_eq!((r.suite.as_str(), r.seed, r.scenario.order, r.scenario.dim), ("jets", 5, 7, 2));
    assert_eq!(r.scenario.trials, 20);

    let out = verify(&["--scenario", path.to_str().unwrap(), "--seed", "6", "--format", "json"]);
    assert_eq!(json_report(&out).seed, 6);
}

#[test]
fn unknown_scenario_field_is_an_error() {
    let path = scratch_file("typo.json", r#"{"suite": "jets", "sede": 5}"#);
    let out = verify(&["--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_check_gives_nonzero_exit() {
    let path = scratch_file("strict.json", r#"{"suite": "maurer-cartan", "seed": 1, "fd_tolerance": 1e-12}"#);
    let out = verify(&["--scenario", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json_report(&out);
    assert!(r.totals.fail > 0);
    assert!(!r.passed());
}

#[test]
fn text_table_has_one_row_per_check() {
    let out = verify(&["schwarzian", "--seed", "7"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = text.lines().filter(|l| l.starts_with("schwarzian/")).count();
    assert_eq!(rows, 4);
    assert!(text.lines().last().unwrap().starts_with("4 passed, 0 failed"));
}
