//! CLI behavior: golden answers on the bundled fixtures, exit-code mapping,
//! DOT export, and the binary end to end.

mod common;

use common::fixture_path;
use externet::cli::{self, parse_profile_arg, Command, OutputFormat, RunConfig};
use externet::model::EconomySpec;
use ndarray::arr2;
use std::process::Command as Process;

fn config(command: Command, fixture: &str) -> RunConfig {
    RunConfig::new(command, fixture_path(fixture))
}

#[test]
fn essential_on_figure_fixture() {
    let out = cli::run(&config(Command::Essential, "figure1.json")).unwrap();
    let essential = &out.report["essential"];
    assert_eq!(essential["essential"], serde_json::json!([4]));
    assert!(essential["rho_full"].as_f64().unwrap() > 1.0);
    assert_eq!(essential["per_agent"][3]["rho_without"], serde_json::json!(0.0));
    assert_eq!(out.report["command"], "essential");
    assert!(out.report["tolerances"]["eig"].as_f64().unwrap() > 0.0);
    assert_eq!(out.report["version"], externet::version());
}

#[test]
fn solve_on_reciprocal_fixture() {
    let out = cli::run(&config(Command::Solve, "two_agent_log.json")).unwrap();
    let a = out.report["certificate"]["a_star"].as_array().unwrap();
    for v in a {
        assert!((v.as_f64().unwrap() - 1.0).abs() <= 1e-8);
    }
    assert_eq!(out.report["verification"]["pass"], serde_json::json!(true));
}

#[test]
fn solve_on_bonacich_fixture() {
    let out = cli::run(&config(Command::Solve, "bonacich.json")).unwrap();
    let a = out.report["certificate"]["a_star"].as_array().unwrap();
    for v in a {
        assert!((v.as_f64().unwrap() - 2.0).abs() <= 1e-8);
    }
}

#[test]
fn diagnose_with_profile() {
    let mut cfg = config(Command::Diagnose, "two_agent_log.json");
    cfg.profile = Some(parse_profile_arg("1,1"));
    let out = cli::run(&cfg).unwrap();
    assert_eq!(out.report["efficiency"]["verdict"], "efficient");
    let rho = out.report["efficiency"]["rho"].as_f64().unwrap();
    assert!((rho - 1.0).abs() <= 1e-8);
}

#[test]
fn diagnose_status_quo_of_log_economy_notes_convention() {
    let out = cli::run(&config(Command::Diagnose, "two_agent_log.json")).unwrap();
    assert_eq!(
        out.report["efficiency"]["verdict"],
        "status_quo_improvable"
    );
    assert!(out.report["efficiency"]["note"].is_string());
    // rho is undefined there; JSON carries null.
    assert!(out.report["efficiency"]["rho"].is_null());
}

#[test]
fn weights_requires_profile() {
    let err = cli::run(&config(Command::Weights, "two_agent_log.json")).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn weights_at_inefficient_profile_is_an_analysis_error() {
    let mut cfg = config(Command::Weights, "two_agent_log.json");
    cfg.profile = Some(parse_profile_arg("0.5,0.5"));
    let err = cli::run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("not efficient"));
}

#[test]
fn separate_on_reciprocal_fixture() {
    let mut cfg = config(Command::Separate, "two_agent_log.json");
    cfg.partition = Some(vec![1]);
    let out = cli::run(&cfg).unwrap();
    let bound = out.report["separation"]["bound"].as_f64().unwrap();
    assert!((bound - 2.0).abs() <= 1e-9);
    assert_eq!(out.report["separation"]["partition"], serde_json::json!([1]));
}

#[test]
fn separate_requires_partition() {
    let err = cli::run(&config(Command::Separate, "two_agent_log.json")).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn cycles_on_figure_fixture() {
    let out = cli::run(&config(Command::Cycles, "figure1.json")).unwrap();
    let values = out.report["cycles"]["values"].as_array().unwrap();
    assert_eq!(values.len(), 20);
    assert!(out.report["cycles"]["rho"].as_f64().unwrap() > 1.0);
}

#[test]
fn validate_reports_pass() {
    let mut cfg = config(Command::Validate, "figure1.json");
    cfg.profile = Some(parse_profile_arg("1,1,1,1"));
    let out = cli::run(&cfg).unwrap();
    assert_eq!(out.report["validation"]["pass"], serde_json::json!(true));
    assert_eq!(
        out.report["validation"]["samples"].as_array().unwrap().len(),
        2
    );
}

#[test]
fn bad_input_paths_exit_one() {
    let err = cli::run(&RunConfig::new(Command::Diagnose, "/nonexistent.json")).unwrap_err();
    assert_eq!(err.exit_code(), 1);

    let mut cfg = config(Command::Diagnose, "figure1.json");
    cfg.tol_eig = Some(-1.0);
    assert_eq!(cli::run(&cfg).unwrap_err().exit_code(), 1);

    let mut cfg = config(Command::Diagnose, "figure1.json");
    cfg.profile = Some(parse_profile_arg("1,2"));
    assert_eq!(cli::run(&cfg).unwrap_err().exit_code(), 1);
}

#[test]
fn fixture_economies_round_trip() {
    for fixture in ["figure1.json", "two_agent_log.json", "bonacich.json"] {
        let text = std::fs::read_to_string(fixture_path(fixture)).unwrap();
        let spec = EconomySpec::from_json_str(&text).unwrap();
        let json = spec.to_json_string().unwrap();
        let again = EconomySpec::from_json_str(&json).unwrap();
        assert_eq!(json, again.to_json_string().unwrap(), "{fixture}");
    }
}

#[test]
fn dot_export_orients_provider_to_beneficiary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("figure.dot");
    let mut cfg = config(Command::Essential, "figure1.json");
    cfg.dot_export = Some(path.clone());
    cli::run(&cfg).unwrap();
    let dot = std::fs::read_to_string(&path).unwrap();
    // B_13 = 7: provider 3 confers on beneficiary 1.
    assert!(dot.contains("3 -> 1 [label=\"7\"]"), "{dot}");
    assert!(dot.contains("4 -> 2 [label=\"0.5\"]"), "{dot}");
    assert!(!dot.contains("label=\"0\""));
}

#[test]
fn dot_export_of_empty_network() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.dot");
    cli::export_dot(&ndarray::Array2::zeros((4, 4)), &path).unwrap();
    let dot = std::fs::read_to_string(&path).unwrap();
    assert_eq!(dot.matches(';').count(), 4); // 4 nodes, 0 edges
    assert!(!dot.contains("->"));
}

#[test]
fn dot_export_of_reciprocal_pair_has_equal_labels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.dot");
    cli::export_dot(&arr2(&[[0.0, 1.5], [1.5, 0.0]]), &path).unwrap();
    let dot = std::fs::read_to_string(&path).unwrap();
    assert!(dot.contains("2 -> 1 [label=\"1.5\"]"));
    assert!(dot.contains("1 -> 2 [label=\"1.5\"]"));
}

#[test]
fn table_format_renders() {
    let mut cfg = config(Command::Essential, "figure1.json");
    cfg.output_format = OutputFormat::Table;
    let out = cli::run(&cfg).unwrap();
    assert!(out.rendered.contains("essential      [4]"), "{}", out.rendered);
    assert!(out.rendered.contains("rho_full"));
}

#[test]
fn binary_end_to_end() {
    let output = Process::new(env!("CARGO_BIN_EXE_externet"))
        .args([
            "essential",
            "--input",
            &fixture_path("figure1.json"),
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["essential"]["essential"], serde_json::json!([4]));
}

#[test]
fn binary_maps_input_errors_to_exit_one() {
    let output = Process::new(env!("CARGO_BIN_EXE_externet"))
        .args(["diagnose", "--input", "/nonexistent.json"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(!output.stderr.is_empty());
}

#[test]
fn binary_honors_max_iter_env() {
    // A 3-iteration cap cannot converge any eigenvalue solve: analysis error.
    let output = Process::new(env!("CARGO_BIN_EXE_externet"))
        .args(["essential", "--input", &fixture_path("figure1.json")])
        .env("EXTERNET_MAX_ITER", "3")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    let output = Process::new(env!("CARGO_BIN_EXE_externet"))
        .args(["essential", "--input", &fixture_path("figure1.json")])
        .env("EXTERNET_MAX_ITER", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn solve_with_seed_is_reproducible_through_the_binary() {
    let run = || {
        Process::new(env!("CARGO_BIN_EXE_externet"))
            .args([
                "solve",
                "--input",
                &fixture_path("bonacich.json"),
                "--seed",
                "7",
            ])
            .output()
            .unwrap()
    };
    let first = run();
    let second = run();
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}
