//! End-to-end pipeline tests: bundle determinism, config validation and
//! plot-data emission.

use std::fs;
use std::path::{Path, PathBuf};

use polytail_cli::config::ExperimentConfig;
use polytail_cli::report::{emit_plot_data, run_pipeline, PipelineScope};

fn minimal_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!(
        r#"
schema = 1
seed = {seed}

[polynomial]
arity = 1
terms = [{{ exponents = [1.0], coefficient = 1.0 }}]

[tail]
alpha = 1.5
k = 0.0
c_plus = 0.5
c_minus = 0.5

[simulation]
qcase = "l-dep"
n_list = [1000]
replicates = 10
export_paths = 1
a_n_draws = 10000

[diagnostics]
tail_fit = true
hill = true
cf = true
summand_draws = 1000000
"#
    ))
    .expect("valid config")
}

fn payload_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().to_string(), fs::read(&p).unwrap())
        })
        .filter(|(name, _)| name != "manifest.json")
        .collect();
    files.sort();
    files
}

#[test]
fn minimal_smoke_bundle_has_manifest_and_ensemble() {
    let cfg = minimal_config(7);
    let dir = std::env::temp_dir().join(format!("polytail-smoke-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    run_pipeline(&cfg, &dir, PipelineScope::Report, Path::new(".")).unwrap();
    assert!(dir.join("manifest.json").exists());
    assert!(dir.join("ensemble_n1000.csv").exists());
    assert!(dir.join("indices.json").exists());
    assert!(dir.join("tails.json").exists());
    let csv = fs::read_to_string(dir.join("ensemble_n1000.csv")).unwrap();
    assert!(csv.starts_with("# config="));
    assert_eq!(csv.lines().nth(1).unwrap(), "replicate,theta_0,xi");
    assert_eq!(csv.lines().count(), 2 + 10);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bundles_are_byte_identical_across_runs() {
    let cfg = minimal_config(99);
    let base = std::env::temp_dir().join(format!("polytail-det-{}", std::process::id()));
    let _ = fs::remove_dir_all(&base);
    let d1 = base.join("a");
    let d2 = base.join("b");
    run_pipeline(&cfg, &d1, PipelineScope::Report, Path::new(".")).unwrap();
    run_pipeline(&cfg, &d2, PipelineScope::Report, Path::new(".")).unwrap();
    let f1 = payload_files(&d1);
    let f2 = payload_files(&d2);
    assert_eq!(f1.len(), f2.len());
    for ((n1, b1), (n2, b2)) in f1.iter().zip(&f2) {
        assert_eq!(n1, n2);
        assert_eq!(b1, b2, "payload {n1} differs between identical runs");
    }
    fs::remove_dir_all(&base).unwrap();
}

#[test]
fn different_seeds_differ() {
    let base = std::env::temp_dir().join(format!("polytail-seeds-{}", std::process::id()));
    let _ = fs::remove_dir_all(&base);
    let d1 = base.join("a");
    let d2 = base.join("b");
    run_pipeline(&minimal_config(1), &d1, PipelineScope::Simulate, Path::new(".")).unwrap();
    run_pipeline(&minimal_config(2), &d2, PipelineScope::Simulate, Path::new(".")).unwrap();
    let e1 = fs::read(d1.join("ensemble_n1000.csv")).unwrap();
    let e2 = fs::read(d2.join("ensemble_n1000.csv")).unwrap();
    assert_ne!(e1, e2);
    fs::remove_dir_all(&base).unwrap();
}

#[test]
fn plot_emission_and_missing_diagnostic() {
    let cfg = minimal_config(5);
    let base = std::env::temp_dir().join(format!("polytail-plot-{}", std::process::id()));
    let _ = fs::remove_dir_all(&base);
    let bundle = base.join("bundle");
    run_pipeline(&cfg, &bundle, PipelineScope::Report, Path::new(".")).unwrap();
    let plots = base.join("plots");
    emit_plot_data(&bundle, "tail-ladder", &plots).unwrap();
    emit_plot_data(&bundle, "cf-grid", &plots).unwrap();
    emit_plot_data(&bundle, "path-sample", &plots).unwrap();
    assert!(plots.join("tail_ladder_n1000.csv").exists());
    assert!(plots.join("cf_grid_n1000.csv").exists());
    // path-sample columns are exactly (t, value) and match the stored path.
    let sample = fs::read_to_string(plots.join("path_n1000_rep0_sample.csv")).unwrap();
    assert_eq!(sample.lines().next().unwrap(), "t,value");
    let full = fs::read_to_string(bundle.join("path_n1000_rep0.csv")).unwrap();
    let full_last: Vec<&str> = full.lines().last().unwrap().split(',').collect();
    let sample_last: Vec<&str> = sample.lines().last().unwrap().split(',').collect();
    assert_eq!(sample_last[0], full_last[0]);
    assert_eq!(sample_last[1], full_last[full_last.len() - 1]);
    // Trend data is absent from this bundle.
    let err = emit_plot_data(&bundle, "trend", &plots).unwrap_err();
    assert!(format!("{err:#}").contains("config error"));
    fs::remove_dir_all(&base).unwrap();
}

#[test]
fn invalid_configs_are_rejected() {
    // alpha out of range.
    let err = ExperimentConfig::from_toml_str(
        r#"
schema = 1
seed = 1
[tail]
alpha = 2.5
k = 0.0
c_plus = 1.0
c_minus = 0.0
"#,
    )
    .unwrap_err();
    assert!(err.contains("alpha"));
    // Unknown key.
    assert!(ExperimentConfig::from_toml_str("schema = 1\nseed = 1\nbogus = 3\n").is_err());
    // Wrong schema version.
    assert!(ExperimentConfig::from_toml_str("schema = 99\nseed = 1\n").is_err());
}

#[test]
fn joint_jump_diagnostics_are_written() {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
schema = 1
seed = 11

[polynomial]
arity = 2
terms = [
  { exponents = [1.0, 0.0], coefficient = 1.0 },
  { exponents = [0.0, 1.0], coefficient = 1.0 },
]

[tail]
alpha = 1.5
k = 0.0
c_plus = 0.5
c_minus = 0.5

[simulation]
qcase = "l-dep"
n_list = [2000]
replicates = 50
a_n_draws = 10000

[diagnostics]
joint_jumps = { components = [0, 1], delta = 0.5 }
"#,
    )
    .unwrap();
    let dir = std::env::temp_dir().join(format!("polytail-jj-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    run_pipeline(&cfg, &dir, PipelineScope::Diagnose, Path::new(".")).unwrap();
    let scan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("joint_jumps_n2000.json")).unwrap())
            .unwrap();
    // l-dependent F = x1 + x2: adjacent joint jumps happen, simultaneous
    // ones are rare.
    assert!(scan["adjacent_count"].as_u64().unwrap() > 0);
    fs::remove_dir_all(&dir).unwrap();
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn checked_in_configs_all_parse() {
    let dir = configs_dir();
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            count += 1;
        }
    }
    assert!(count >= 10);
}
