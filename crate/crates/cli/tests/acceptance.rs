//! Acceptance gate: every quantitative criterion at its pinned tolerance,
//! one pass/fail line per check. Run with
//! `cargo test -p uplin-cli --test acceptance -- --nocapture`.

use uplin_cli::acceptance::{self, CriterionCheck};

fn assert_all_pass(checks: &[CriterionCheck]) {
    for check in checks {
        println!("{check}");
    }
    let failed: Vec<&CriterionCheck> = checks.iter().filter(|c| !c.pass).collect();
    assert!(
        failed.is_empty(),
        "{} of {} checks failed: {:?}",
        failed.len(),
        checks.len(),
        failed.iter().map(|c| c.id.as_str()).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_1_coefficient_recovery() {
    assert_all_pass(&acceptance::criterion_1_coefficients().unwrap());
}

#[test]
fn criterion_2_linearization_inequality() {
    assert_all_pass(&acceptance::criterion_2_linearization_inequality().unwrap());
}

#[test]
fn criterion_3_estimator_correctness() {
    assert_all_pass(&acceptance::criterion_3_estimator().unwrap());
}

#[test]
fn criterion_4_sampler_distribution() {
    assert_all_pass(&acceptance::criterion_4_sampler().unwrap());
}

#[test]
fn criterion_5_regret_bound() {
    assert_all_pass(&acceptance::criterion_5_regret().unwrap());
}

#[test]
fn criterion_6_offline_guarantee() {
    assert_all_pass(&acceptance::criterion_6_offline().unwrap());
}

#[test]
fn criterion_7_containments() {
    assert_all_pass(&acceptance::criterion_7_containments().unwrap());
}

#[test]
fn criterion_8_matroid_geometry() {
    assert_all_pass(&acceptance::criterion_8_matroid_geometry().unwrap());
}

#[test]
fn unknown_suite_lists_valid_names() {
    let err = acceptance::run_suite("nonsense").unwrap_err().to_string();
    for suite in acceptance::SUITES {
        assert!(err.contains(suite), "error should list `{suite}`: {err}");
    }
}
