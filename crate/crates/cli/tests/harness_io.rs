//! Harness behavior: config validation, comparator quality, experiment file
//! outputs, determinism, and the CLI surface.

use std::fs;
use std::process::Command;

use tempfile::tempdir;

use uplin::domains::{ConstraintSet, Point, ThetaSpec};
use uplin::linearization::LinearizationContext;
use uplin::objectives::Objective;
use uplin_cli::comparator::find_comparator;
use uplin_cli::config::ExperimentConfig;
use uplin_cli::experiment::run_experiment;

fn small_config_json(t_rounds: usize, seeds: &str) -> String {
    format!(
        r#"{{
  "constraint": {{"family": "uniform", "d": 3, "k": 2, "basis": true}},
  "objective": {{"type": "quadratic",
                 "a": [1.0, 0.8, 0.6],
                 "h": [[0.1, 0.05, 0.0], [0.05, 0.1, 0.0], [0.0, 0.0, 0.1]]}},
  "theta": {{"kind": "constant_one"}},
  "gamma": 1.0,
  "noise": {{"kind": "none"}},
  "t_rounds": {t_rounds},
  "seeds": [{seeds}],
  "checkpoints": [{t_rounds}]
}}"#
    )
}

#[test]
fn config_validation_errors() {
    let parse = |s: &str| -> anyhow::Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    };
    // Valid baseline.
    parse(&small_config_json(10, "1")).unwrap();
    // No objective.
    let missing = small_config_json(10, "1").replace("\"objective\"", "\"objectives_typo\"");
    assert!(parse(&missing).is_err());
    // Empty seeds.
    assert!(parse(&small_config_json(10, "")).is_err());
    // Checkpoint past the horizon.
    let bad = small_config_json(10, "1").replace("\"checkpoints\": [10]", "\"checkpoints\": [11]");
    assert!(parse(&bad).is_err());
    // Dimension mismatch between objective and constraint.
    let bad = small_config_json(10, "1").replace("\"d\": 3", "\"d\": 4");
    assert!(parse(&bad).is_err());
}

#[test]
fn comparator_linear_exact_at_vertex() {
    let kstar = ConstraintSet::<f64>::make_uniform_matroid(3, 2, true).unwrap();
    let f = Objective::linear(vec![1.0, 0.25, 0.5]).unwrap();
    let result = find_comparator(&kstar, &[f], 1_000, 0).unwrap();
    assert!((result.opt - 1.5).abs() <= 1e-12, "opt {}", result.opt);
    assert!(result.gap_estimate.abs() <= 1e-12);
}

#[test]
fn comparator_matches_dense_grid_oracle() {
    // Basis polytope of the rank-1 uniform matroid on 2 elements is the
    // segment (t, 1-t); brute-force it densely.
    let kstar = ConstraintSet::<f64>::make_uniform_matroid(2, 1, true).unwrap();
    let f = Objective::monotone_quadratic(vec![1.0, 0.9], vec![vec![0.5, 0.2], vec![0.2, 0.5]])
        .unwrap();
    let mut reference = f64::NEG_INFINITY;
    for i in 0..=100_000 {
        let t = i as f64 / 100_000.0;
        reference = reference.max(f.value(&Point::new(vec![t, 1.0 - t])));
    }
    let result = find_comparator(&kstar, &[f], 5_000, 0).unwrap();
    assert!((result.opt - reference).abs() <= 1e-4, "{} vs {reference}", result.opt);
}

#[test]
fn comparator_constant_objective() {
    let kstar = ConstraintSet::<f64>::make_uniform_matroid(3, 1, true).unwrap();
    let f = Objective::linear(vec![0.0, 0.0, 0.0]).unwrap();
    let result = find_comparator(&kstar, &[f], 100, 0).unwrap();
    assert_eq!(result.opt, 0.0);
}

#[test]
fn comparator_monotone_in_budget() {
    let kstar = ConstraintSet::<f64>::make_uniform_matroid(3, 2, true).unwrap();
    let f = Objective::monotone_quadratic(
        vec![1.0, 0.8, 0.6],
        vec![
            vec![0.1, 0.05, 0.0],
            vec![0.05, 0.1, 0.0],
            vec![0.0, 0.0, 0.1],
        ],
    )
    .unwrap();
    let mut budget = 50usize;
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..4 {
        let result = find_comparator(&kstar, &[f.clone()], budget, 0).unwrap();
        assert!(result.opt >= prev - 1e-15, "OPT decreased when budget doubled");
        prev = result.opt;
        budget *= 2;
    }
    assert!(find_comparator(&kstar, &[f], 0, 0).is_err());
}

#[test]
fn experiment_writes_artifacts() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("nested").join("out");
    let cfg: ExperimentConfig = serde_json::from_str(&small_config_json(50, "1, 2")).unwrap();
    let summary = run_experiment(&cfg, &out).unwrap();

    // Files exist (the nested directory was created).
    let csv = fs::read_to_string(out.join("regret.csv")).unwrap();
    assert!(out.join("summary.json").exists());
    assert!(out.join("regret.svg").exists());

    // Row count = |seeds| * T plus header; header shape.
    let lines: Vec<&str> = csv.trim_end().lines().collect();
    assert_eq!(lines[0], "seed,t,x0,x1,x2,f,cum_regret");
    assert_eq!(lines.len(), 1 + 2 * 50);

    // Every row's action is feasible for K*.
    let kstar = ConstraintSet::<f64>::make_uniform_matroid(3, 2, true).unwrap();
    for line in &lines[1..] {
        let cols: Vec<f64> = line.split(',').skip(2).take(3).map(|v| v.parse().unwrap()).collect();
        assert!(kstar.contains(&Point::new(cols)), "infeasible row: {line}");
    }

    // Recorded alpha equals a recomputation from the config.
    let ctx = LinearizationContext::for_set(
        cfg.gamma,
        ThetaSpec::constant_one(),
        &cfg.constraint.build::<f64>().unwrap(),
    )
    .unwrap();
    let alpha = ctx.alpha_star(&kstar).unwrap();
    assert!((summary.alpha - alpha).abs() <= 1e-12);

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!((json["alpha"].as_f64().unwrap() - alpha).abs() <= 1e-12);
}

#[test]
fn identical_seeds_identical_rows() {
    let dir = tempdir().unwrap();
    let cfg: ExperimentConfig = serde_json::from_str(&small_config_json(25, "9, 9")).unwrap();
    run_experiment(&cfg, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("regret.csv")).unwrap();
    let lines: Vec<&str> = csv.trim_end().lines().collect();
    let strip_seed = |l: &str| l.splitn(2, ',').nth(1).unwrap().to_string();
    for i in 0..25 {
        assert_eq!(strip_seed(lines[1 + i]), strip_seed(lines[1 + 25 + i]));
    }
}

#[test]
fn unwritable_output_dir_is_an_error() {
    let dir = tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, b"occupied").unwrap();
    let cfg: ExperimentConfig = serde_json::from_str(&small_config_json(5, "1")).unwrap();
    let err = run_experiment(&cfg, &blocker.join("out")).unwrap_err();
    assert!(err.to_string().contains("creating output directory"), "{err:#}");
}

#[test]
fn otb_mode_reports_threshold() {
    let dir = tempdir().unwrap();
    let raw = small_config_json(200, "1, 2, 3").replace(
        "\"checkpoints\": [200]",
        "\"checkpoints\": [200], \"mode\": \"otb\"",
    );
    let cfg: ExperimentConfig = serde_json::from_str(&raw).unwrap();
    let summary = run_experiment(&cfg, dir.path()).unwrap();
    let otb = summary.otb.expect("otb summary present");
    assert!(otb.pass, "mean {} vs threshold {}", otb.mean_value, otb.threshold);
}

// ---------------------------------------------------------------------------
// CLI surface

fn uplin_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uplin"))
}

#[test]
fn cli_run_and_opt() {
    let dir = tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, small_config_json(30, "1, 2")).unwrap();
    let out_dir = dir.path().join("artifacts");

    let status = uplin_cmd()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--seeds", "5,6,7"])
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_dir.join("summary.json").exists());
    // The seed override reached the run: 3 seeds x 30 rounds.
    let csv = fs::read_to_string(out_dir.join("regret.csv")).unwrap();
    assert_eq!(csv.trim_end().lines().count(), 1 + 3 * 30);

    let output = uplin_cmd()
        .args(["opt", "--config"])
        .arg(&cfg_path)
        .args(["--budget", "500"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(parsed["opt"].as_f64().is_some());
}

#[test]
fn cli_rejects_unknown_suite() {
    let output = uplin_cmd().args(["accept", "--suite", "bogus"]).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("geometry"), "stderr should list suites: {stderr}");
}

#[test]
fn cli_accept_geometry_passes() {
    let output = uplin_cmd().args(["accept", "--suite", "geometry"]).output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("[PASS]"));

    let output = uplin_cmd()
        .args(["accept", "--suite", "geometry", "--json"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let checks: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(checks.as_array().unwrap().iter().all(|c| c["pass"].as_bool().unwrap()));
}
