//! Acceptance suite: runs every checked-in criterion config at its stated
//! scale and tolerance, printing one pass/fail line per criterion.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::path::PathBuf;

use polytail_cli::config::ExperimentConfig;
use polytail_cli::experiments::run_experiment_spec;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_criterion(number: u8) {
    let dir = configs_dir();
    let path = dir.join(format!("criterion_{number:02}.toml"));
    let cfg = ExperimentConfig::load(&path).expect("config loads");
    let started = std::time::Instant::now();
    let run = run_experiment_spec(&cfg, &dir).expect("experiment runs");
    let verdict = if run.passed { "PASS" } else { "FAIL" };
    println!(
        "criterion {number:02} [{}] {verdict} ({:.1}s): {}",
        run.name,
        started.elapsed().as_secs_f64(),
        run.detail
    );
    assert!(run.passed, "criterion {number:02} failed: {}", run.detail);
}

#[test]
fn criterion_01_equal_index_product_law() {
    run_criterion(1);
}

#[test]
fn criterion_02_beta_function_exponent_bookkeeping() {
    run_criterion(2);
}

#[test]
fn criterion_03_loglog_product_diagnostic() {
    run_criterion(3);
}

#[test]
fn criterion_04_coloring_and_decomposition() {
    run_criterion(4);
}

#[test]
fn criterion_05_classical_stable_limit() {
    run_criterion(5);
}

#[test]
fn criterion_06_cluster_effect() {
    run_criterion(6);
}

#[test]
fn criterion_07_arithmetic_progression_dependence() {
    run_criterion(7);
}

#[test]
fn criterion_08_truncation_and_block_trends() {
    run_criterion(8);
}

#[test]
fn criterion_09_centering_normalization() {
    run_criterion(9);
}

#[test]
fn criterion_10_end_to_end_determinism() {
    run_criterion(10);
}
