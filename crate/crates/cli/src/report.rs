//! Report bundles: a manifest plus per-diagnostic JSON summaries and tidy
//! CSV files. Payload bytes are a pure function of (config, seed); wall-clock
//! timing lives only in the manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::Serialize;

use polytail::diagnostics::{
    cf_distance, cf_grid_comparison, default_cf_grid, hill, hill_default_m, increment_dependence,
    joint_jump_scan, lln_check, tail_fit, CfGridPoint, LevyLimit, TailSide,
};
use polytail::indexcalc::{
    equivalence_classes, gamma_decomposition, iid_index_summary, scale_condition, shift_condition,
};
use polytail::rng;
use polytail::sampler::RNG_SCHEME;
use polytail::simulator::{replicate_ensemble, simulate_paths, EnsembleSpec};
use polytail::sampler::monomial_mean;
use polytail::tailspec::{polynomial_tail_with_draws, TailedLaw};

use crate::config::ExperimentConfig;
use crate::experiments::{pipeline_inputs, run_experiment_spec};

#[derive(Serialize)]
pub struct Manifest {
    pub schema: u32,
    pub crate_version: &'static str,
    pub rng_scheme: &'static str,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub files: Vec<String>,
    /// Wall-clock timing; excluded from determinism comparisons.
    pub timing_seconds: f64,
}

pub struct BundleWriter {
    dir: PathBuf,
    files: Vec<String>,
    config_echo: String,
}

impl BundleWriter {
    pub fn new(dir: &Path, cfg: &ExperimentConfig) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let config_echo = serde_json::to_string(cfg)?;
        Ok(BundleWriter { dir: dir.to_path_buf(), files: Vec::new(), config_echo })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        let mut out = serde_json::to_vec_pretty(value)?;
        out.push(b'\n');
        fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// CSV with the mandatory config-echo line and a column header.
    pub fn write_csv(
        &mut self,
        name: &str,
        header: &str,
        rows: impl Iterator<Item = String>,
    ) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        writeln!(f, "# config={}", self.config_echo)?;
        writeln!(f, "{header}")?;
        for row in rows {
            writeln!(f, "{row}")?;
        }
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish(mut self, cfg: &ExperimentConfig, timing_seconds: f64) -> anyhow::Result<PathBuf> {
        let manifest = Manifest {
            schema: crate::config::SCHEMA_VERSION,
            crate_version: env!("CARGO_PKG_VERSION"),
            rng_scheme: RNG_SCHEME,
            seed: cfg.seed,
            config: cfg.clone(),
            files: std::mem::take(&mut self.files),
            timing_seconds,
        };
        let path = self.dir.join("manifest.json");
        let mut out = serde_json::to_vec_pretty(&manifest)?;
        out.push(b'\n');
        fs::write(&path, out)?;
        Ok(self.dir)
    }
}

#[derive(Serialize)]
struct IndicesReport {
    summary: polytail::indexcalc::IndexSummary,
    shift_condition: polytail::indexcalc::ShiftCheck,
    scale_condition: polytail::indexcalc::ScaleCheck,
}

#[derive(Serialize)]
struct TailsReport {
    per_term: Vec<polytail::tailspec::TailSpec>,
    polynomial: polytail::tailspec::TailSpec,
    groups: Vec<polytail::tailspec::GroupBreakdown>,
}

#[derive(Serialize)]
struct EnsembleStats {
    n: u64,
    b_n: f64,
    a_n: Vec<f64>,
    replicates: u64,
}

#[derive(Serialize)]
struct TailFitReport {
    side: String,
    fit: polytail::diagnostics::TailFit,
    predicted: polytail::tailspec::TailSpec,
    hill_estimate: Option<f64>,
    hill_m: Option<usize>,
    sample_size: u64,
}

#[derive(Serialize)]
struct CfReport {
    n: u64,
    distance: f64,
    grid: Vec<CfGridPoint>,
}

/// What to run and write.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PipelineScope {
    /// Simulation and exports only.
    Simulate,
    /// Simulation plus diagnostics.
    Diagnose,
    /// Everything (indices, tails, simulation, diagnostics, experiment).
    Report,
}

/// Executes the pipeline (indices -> tails -> simulate -> diagnostics) and
/// writes the bundle; returns the bundle directory.
pub fn run_pipeline(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    scope: PipelineScope,
    base_dir: &Path,
) -> anyhow::Result<PathBuf> {
    let started = std::time::Instant::now();
    let mut w = BundleWriter::new(out_dir, cfg)?;

    // Specialized experiment configs bypass the generic pipeline.
    if cfg.experiment.is_some() && scope == PipelineScope::Report {
        let run = run_experiment_spec(cfg, base_dir)?;
        #[derive(Serialize)]
        struct ExperimentReport<'a> {
            name: &'a str,
            passed: bool,
            detail: &'a str,
            payload: &'a serde_json::Value,
        }
        w.write_json(
            "experiment.json",
            &ExperimentReport {
                name: run.name,
                passed: run.passed,
                detail: &run.detail,
                payload: &run.payload,
            },
        )?;
        println!(
            "{}: {} ({})",
            run.name,
            if run.passed { "PASS" } else { "FAIL" },
            run.detail
        );
        return w.finish(cfg, started.elapsed().as_secs_f64());
    }

    let inputs = pipeline_inputs(cfg)?;
    let sampler = &inputs.sampler;
    let f = &inputs.f;
    let tail = sampler.tail_spec();
    let dists: Vec<&dyn TailedLaw> = vec![sampler as &dyn TailedLaw; f.arity];

    // Indices and tail arithmetic.
    if scope == PipelineScope::Report {
        let summary = iid_index_summary(f, tail.alpha, tail.k).map_err(|e| anyhow!(e))?;
        let report = IndicesReport {
            shift_condition: shift_condition(&summary),
            scale_condition: scale_condition(&summary),
            summary,
        };
        w.write_json("indices.json", &report)?;

        let (poly_tail, groups) = polynomial_tail_with_draws(&dists, f, cfg.seed, 1_000_000)?;
        let per_term = f
            .terms
            .iter()
            .map(|m| polytail::tailspec::monomial_tail(&dists, m))
            .collect::<Result<Vec<_>, _>>()?;
        w.write_json("tails.json", &TailsReport { per_term, polynomial: poly_tail, groups })?;
    }

    let diag = cfg.diagnostics.clone().unwrap_or_default();
    let need_checkpoints = diag.increment_dependence.is_some();
    let sim = cfg.simulation.as_ref().unwrap();

    for (n, norm) in &inputs.norms {
        let n = *n;
        let suffix = format!("n{n}");
        w.write_json(
            &format!("normalization_{suffix}.json"),
            &EnsembleStats {
                n,
                b_n: norm.b_n,
                a_n: norm.a_n.clone(),
                replicates: inputs.replicates,
            },
        )?;
        let spec = EnsembleSpec {
            f: f.clone(),
            qcase: inputs.qcase,
            n,
            horizon: inputs.horizon,
            checkpoints: if need_checkpoints {
                vec![0.25 * inputs.horizon, 0.5 * inputs.horizon, inputs.horizon]
            } else {
                vec![]
            },
            jump_threshold: diag.joint_jumps.as_ref().map(|j| j.delta),
        };
        let ens = replicate_ensemble(&spec, sampler, norm, cfg.seed, inputs.replicates)?;

        // Ensemble export: one row per replicate of end values.
        let nt = f.terms.len();
        let theta_cols: Vec<String> = (0..nt).map(|i| format!("theta_{i}")).collect();
        w.write_csv(
            &format!("ensemble_{suffix}.csv"),
            &format!("replicate,{},xi", theta_cols.join(",")),
            ens.iter().map(|r| {
                let thetas =
                    r.end_theta.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(",");
                format!("{},{},{:.17e}", r.replicate, thetas, r.end_sum)
            }),
        )?;

        // Full-resolution replicate paths.
        let rep_key = rng::derive(cfg.seed, "replicate");
        for rep in 0..sim.export_paths.min(inputs.replicates) {
            let x_key = rng::derive_idx(rep_key, rep);
            let bundle =
                simulate_paths(f, inputs.qcase, n, inputs.horizon, sampler, norm, x_key, false)?;
            let rows = (0..bundle.sum.values.len()).map(|m| {
                let t = m as f64 / n as f64;
                let thetas = bundle
                    .per_theta
                    .iter()
                    .map(|p| format!("{:.17e}", p.values[m]))
                    .collect::<Vec<_>>()
                    .join(",");
                format!("{t:.10},{thetas},{:.17e}", bundle.sum.values[m])
            });
            w.write_csv(
                &format!("path_{suffix}_rep{rep}.csv"),
                &format!("t,{},xi", theta_cols.join(",")),
                rows,
            )?;
        }

        if scope == PipelineScope::Simulate {
            continue;
        }

        // Diagnostics.
        if diag.tail_fit || diag.hill {
            let draws = diag.summand_draws.unwrap_or(1_000_000);
            let key = rng::derive(cfg.seed, "diagnostics.summand");
            let sample: Vec<f64> = (0..draws)
                .map(|i| {
                    let xs: Vec<f64> =
                        (0..f.arity).map(|j| sampler.draw(rng::derive_idx(key, j as u64), i)).collect();
                    f.eval(&xs)
                })
                .collect();
            let (predicted, _) = polynomial_tail_with_draws(&dists, f, cfg.seed, 200_000)?;
            let fit = if diag.tail_fit {
                Some(tail_fit(&sample, TailSide::Plus)?)
            } else {
                None
            };
            let (hill_est, hill_m) = if diag.hill {
                let m = hill_default_m(sample.len());
                (Some(hill(&sample, m)?), Some(m))
            } else {
                (None, None)
            };
            if let Some(fit) = fit {
                let report = TailFitReport {
                    side: "plus".into(),
                    fit,
                    predicted,
                    hill_estimate: hill_est,
                    hill_m,
                    sample_size: draws,
                };
                w.write_json(&format!("tail_fit_{suffix}.json"), &report)?;
                w.write_csv(
                    &format!("tail_ladder_{suffix}.csv"),
                    "z,empirical_survival,fitted_survival",
                    report
                        .fit
                        .thresholds
                        .iter()
                        .zip(report.fit.survival.iter().zip(&report.fit.fitted_survival))
                        .map(|(z, (s, fs))| format!("{z:.10e},{s:.10e},{fs:.10e}")),
                )?;
            } else if let Some(h) = hill_est {
                #[derive(Serialize)]
                struct HillOnly {
                    hill_estimate: f64,
                    hill_m: usize,
                }
                w.write_json(
                    &format!("hill_{suffix}.json"),
                    &HillOnly { hill_estimate: h, hill_m: hill_m.unwrap() },
                )?;
            }
        }

        if diag.cf {
            let (poly_tail, _) = polynomial_tail_with_draws(&dists, f, cfg.seed, 200_000)?;
            let limit = LevyLimit::from_tail_spec(poly_tail);
            let ends: Vec<f64> = ens.iter().map(|r| r.end_sum).collect();
            let grid = default_cf_grid();
            let distance = cf_distance(&ends, &limit, inputs.horizon, &grid);
            let comparison = cf_grid_comparison(&ends, &limit, inputs.horizon, &grid);
            w.write_json(&format!("cf_{suffix}.json"), &CfReport { n, distance, grid: comparison })?;
            w.write_csv(
                &format!("cf_grid_{suffix}.csv"),
                "xi,re_emp,im_emp,re_theory,im_theory",
                cf_grid_comparison(&ends, &limit, inputs.horizon, &grid).iter().map(|p| {
                    format!(
                        "{:.4},{:.10e},{:.10e},{:.10e},{:.10e}",
                        p.xi, p.re_emp, p.im_emp, p.re_theory, p.im_theory
                    )
                }),
            )?;
        }

        if let Some(dep) = &diag.increment_dependence {
            let a: Vec<f64> =
                ens.iter().map(|r| r.checkpoint_sum[1] - r.checkpoint_sum[0]).collect();
            let b: Vec<f64> =
                ens.iter().map(|r| r.checkpoint_sum[2] - r.checkpoint_sum[1]).collect();
            let test = increment_dependence(
                &a,
                &b,
                dep.permutations,
                rng::derive(cfg.seed, "diagnostics.dependence"),
            )?;
            w.write_json(&format!("dependence_{suffix}.json"), &test)?;
        }

        if let Some(jj) = &diag.joint_jumps {
            let jumps: Vec<Vec<polytail::simulator::JumpEvent>> =
                ens.iter().map(|r| r.jumps.clone()).collect();
            let scan =
                joint_jump_scan(&jumps, (jj.components[0], jj.components[1]), jj.delta, n)?;
            w.write_json(&format!("joint_jumps_{suffix}.json"), &scan)?;
        }

        if diag.lln {
            let theta = 0usize;
            let expected = monomial_mean(&dists, &f.terms[theta])?;
            let steps = (n as f64 * inputs.horizon).floor() as f64;
            let scaled: Vec<f64> = ens
                .iter()
                .map(|r| (r.end_theta[theta] * norm.b_n + steps * norm.a_n[theta]) / n as f64)
                .collect();
            w.write_json(&format!("lln_{suffix}.json"), &lln_check(&scaled, expected))?;
        }
    }

    // Decomposition side artifacts when requested via q_list.
    if scope == PipelineScope::Report && !sim.q_list.is_empty() {
        let ell = f.arity as u64;
        let bound = *sim.n_list.iter().max().unwrap();
        let decomp = gamma_decomposition(ell, bound)?;
        let summary = iid_index_summary(f, tail.alpha, tail.k)?;
        let q = sim.q_list.iter().copied().max().unwrap().min(decomp.gamma1.len());
        let partition = equivalence_classes(&decomp, &summary, q)?;
        w.write_json("equivalence.json", &partition)?;
        w.write_csv(
            "gamma1.csv",
            "rank,n_j",
            decomp.gamma1.iter().enumerate().map(|(i, g)| format!("{},{}", i + 1, g)),
        )?;
    }

    w.finish(cfg, started.elapsed().as_secs_f64())
}

/// Re-emits plot CSVs from a stored bundle (tail-ladder, cf-grid,
/// path-sample, trend). Missing diagnostics are a usage error (exit 2).
pub fn emit_plot_data(bundle_dir: &Path, kind: &str, out_dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir)?;
    let find = |prefix: &str, ext: &str| -> anyhow::Result<Vec<PathBuf>> {
        let mut found = Vec::new();
        for entry in fs::read_dir(bundle_dir)? {
            let p = entry?.path();
            let name = p.file_name().unwrap().to_string_lossy().to_string();
            if name.starts_with(prefix) && name.ends_with(ext) {
                found.push(p);
            }
        }
        found.sort();
        Ok(found)
    };
    match kind {
        "tail-ladder" => {
            let files = find("tail_fit_", ".json")?;
            if files.is_empty() {
                bail!("config error: bundle has no tail_fit diagnostic");
            }
            for f in files {
                let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&f)?)?;
                let fit = &report["fit"];
                let z = fit["thresholds"].as_array().unwrap();
                let s = fit["survival"].as_array().unwrap();
                let fitted = fit["fitted_survival"].as_array().unwrap();
                let name = f.file_stem().unwrap().to_string_lossy().replace("tail_fit", "tail_ladder");
                let mut out = fs::File::create(out_dir.join(format!("{name}.csv")))?;
                writeln!(out, "z,empirical_survival,fitted_survival")?;
                for i in 0..z.len() {
                    writeln!(out, "{},{},{}", z[i], s[i], fitted[i])?;
                }
            }
        }
        "cf-grid" => {
            let files = find("cf_", ".json")?;
            if files.is_empty() {
                bail!("config error: bundle has no cf diagnostic");
            }
            for f in files {
                let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&f)?)?;
                let grid = report["grid"].as_array().unwrap();
                let name = f.file_stem().unwrap().to_string_lossy().replace("cf_", "cf_grid_");
                let mut out = fs::File::create(out_dir.join(format!("{name}.csv")))?;
                writeln!(out, "xi,re_emp,im_emp,re_theory,im_theory")?;
                for p in grid {
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        p["xi"], p["re_emp"], p["im_emp"], p["re_theory"], p["im_theory"]
                    )?;
                }
            }
        }
        "path-sample" => {
            let files = find("path_", ".csv")?;
            if files.is_empty() {
                bail!("config error: bundle has no exported paths");
            }
            for f in files {
                let text = fs::read_to_string(&f)?;
                let name = f.file_stem().unwrap().to_string_lossy().to_string();
                let mut out = fs::File::create(out_dir.join(format!("{name}_sample.csv")))?;
                writeln!(out, "t,value")?;
                for line in text.lines().skip(2) {
                    let cols: Vec<&str> = line.split(',').collect();
                    writeln!(out, "{},{}", cols[0], cols[cols.len() - 1])?;
                }
            }
        }
        "trend" => {
            let f = bundle_dir.join("experiment.json");
            if !f.exists() {
                bail!("config error: bundle has no experiment payload");
            }
            let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&f)?)?;
            let payload = &report["payload"];
            if payload.get("q_medians").is_none() {
                bail!("config error: experiment payload has no trend data");
            }
            let mut out = fs::File::create(out_dir.join("trend.csv"))?;
            writeln!(out, "family,level,median_sup")?;
            let qs = payload["q_list"].as_array().unwrap();
            let qm = payload["q_medians"].as_array().unwrap();
            for (q, m) in qs.iter().zip(qm) {
                writeln!(out, "q_truncation,{q},{m}")?;
            }
            let ks = payload["k_block_list"].as_array().unwrap();
            let em = payload["eta_medians"].as_array().unwrap();
            for (k, m) in ks.iter().zip(em) {
                writeln!(out, "block_gap,{k},{m}")?;
            }
        }
        other => bail!("config error: unknown plot kind '{other}'"),
    }
    Ok(())
}
