//! Specialized experiment runners. Every acceptance-style experiment is a
//! pure function of its config (all randomness flows from the seed), returns
//! a serializable payload whose bytes are reproducible across thread counts,
//! and reports a pass/fail verdict against the tolerances in the config.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;
use serde::Serialize;

use polytail::diagnostics::{
    build_levy_limit_from_clusters, cf_distance, default_cf_grid, increment_dependence,
    joint_jump_scan, lln_check, ClusterInput, ClusterReport, DependenceTest, JumpScan, LevyLimit,
    LlnCheck, SurvivalComparison,
};
use polytail::indexcalc::{
    conflict_coloring, gamma_decomposition, general_index_summary, verify_coloring,
};
use polytail::numeric::{ks_two_sample, median, KahanSum};
use polytail::rng;
use polytail::sampler::{
    build_sampler, empirical_survival, monomial_mean, scaling_b_n, BodyConfig, HeavyTailSampler,
    NormalizationPair, StableSampler,
};
use polytail::simulator::{
    make_normalization, rearranged_paths, replicate_ensemble, stream_paths, EnsembleSpec,
    JumpEvent, QCase,
};
use polytail::tailspec::{
    monomial_tail, product, product_tail, FactorTail, Monomial, Polynomial, TailSpec, TailedLaw,
};

use crate::config::{ExperimentConfig, ExperimentSpec};

/// Outcome of one experiment: a deterministic payload plus the verdict.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub payload: serde_json::Value,
}

fn to_payload<T: Serialize>(v: &T) -> anyhow::Result<serde_json::Value> {
    Ok(serde_json::to_value(v)?)
}

fn sampler_from(cfg: &ExperimentConfig) -> anyhow::Result<HeavyTailSampler> {
    let tail_cfg = cfg.tail.as_ref().ok_or_else(|| anyhow!("[tail] section required"))?;
    let tail = tail_cfg.to_spec().map_err(|e| anyhow!(e))?;
    Ok(build_sampler(tail, body_from(cfg), cfg.seed)?)
}

fn body_from(cfg: &ExperimentConfig) -> BodyConfig {
    match cfg.tail.as_ref().and_then(|t| t.body_width) {
        Some(w) if w < 1.0 => BodyConfig::ScaledUniform { width: w },
        _ => BodyConfig::Uniform,
    }
}

fn polynomial_from(cfg: &ExperimentConfig) -> anyhow::Result<Polynomial> {
    cfg.polynomial
        .as_ref()
        .ok_or_else(|| anyhow!("[polynomial] section required"))?
        .to_polynomial()
        .map_err(|e| anyhow!(e))
}

/// Dispatches the configured experiment kind.
pub fn run_experiment_spec(cfg: &ExperimentConfig, base_dir: &Path) -> anyhow::Result<ExperimentRun> {
    let spec = cfg
        .experiment
        .as_ref()
        .ok_or_else(|| anyhow!("config has no [experiment] section"))?;
    match spec.clone() {
        ExperimentSpec::ProductTailCheck { draws, thresholds, tolerance } => {
            product_tail_check(cfg, draws, &thresholds, tolerance)
        }
        ExperimentSpec::MonomialConsistency { cases, max_arity, max_exponent, max_k } => {
            monomial_consistency(cfg.seed, cases, max_arity, max_exponent, max_k)
        }
        ExperimentSpec::LoglogCheck { draws, thresholds, c1, c2, alpha, tolerance } => {
            loglog_check(cfg.seed, draws, &thresholds, c1, c2, alpha, tolerance)
        }
        ExperimentSpec::DecompositionCheck { ells, coloring_n, factor_bound, density_tolerance } => {
            decomposition_check(&ells, coloring_n, factor_bound, density_tolerance)
        }
        ExperimentSpec::StableLimitCheck { n, replicates, reference_draws, ks_tolerance, cf_tolerance } => {
            stable_limit_check(cfg, n, replicates, reference_draws, ks_tolerance, cf_tolerance)
        }
        ExperimentSpec::ClusterCheck {
            n,
            replicates,
            k_blocks,
            delta,
            tolerance,
            bound_replicates,
            bound_n,
        } => cluster_check(cfg, n, replicates, &k_blocks, delta, tolerance, bound_replicates, bound_n),
        ExperimentSpec::DependenceCheck {
            n,
            replicates,
            permutations,
            level,
            null_meta_replicates,
            null_replicates,
            null_n,
            max_null_rejections,
        } => dependence_check(
            cfg,
            n,
            replicates,
            permutations,
            level,
            null_meta_replicates,
            null_replicates,
            null_n,
            max_null_rejections,
        ),
        ExperimentSpec::TrendCheck { n, replicates, q_list, k_block_list } => {
            trend_check(cfg, n, replicates, &q_list, &k_block_list)
        }
        ExperimentSpec::CenteringCheck { n_list, lln_n, lln_replicates } => {
            centering_check(cfg, &n_list, lln_n, lln_replicates)
        }
        ExperimentSpec::DeterminismCheck { thread_counts, configs } => {
            determinism_check(base_dir, thread_counts, &configs)
        }
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: equal-index product law.

#[derive(Serialize)]
struct ProductTailPayload {
    predicted_tail: TailSpec,
    comparisons: Vec<SurvivalComparison>,
    tolerance: f64,
    min_exceedances: u64,
}

fn product_tail_check(
    cfg: &ExperimentConfig,
    draws: u64,
    thresholds: &[f64],
    tolerance: f64,
) -> anyhow::Result<ExperimentRun> {
    let d = sampler_from(cfg)?;
    let predicted = product_tail(&d, &d)?;
    let key = rng::derive(cfg.seed, "experiment.product_tail");
    let (k1, k2) = (rng::derive_idx(key, 1), rng::derive_idx(key, 2));
    let survival = empirical_survival(|i| d.draw(k1, i) * d.draw(k2, i), draws, thresholds);
    let comparisons: Vec<SurvivalComparison> = thresholds
        .iter()
        .zip(&survival)
        .map(|(&z, &emp)| {
            polytail::diagnostics::compare_survival(emp, predicted.survival(z, true), draws, z)
        })
        .collect();
    let min_exceedances = comparisons.iter().map(|c| c.exceedances).min().unwrap_or(0);
    let passed =
        comparisons.iter().all(|c| c.relative_error <= tolerance) && min_exceedances >= 4_000;
    let detail = comparisons
        .iter()
        .map(|c| format!("z={:.0e}: rel err {:.3}", c.threshold, c.relative_error))
        .collect::<Vec<_>>()
        .join(", ");
    let payload = ProductTailPayload { predicted_tail: predicted, comparisons, tolerance, min_exceedances };
    Ok(ExperimentRun {
        name: "product-tail-check",
        passed,
        detail,
        payload: to_payload(&payload)?,
    })
}

// ---------------------------------------------------------------------------
// Criterion 2: monomial fold vs index calculus over random monomials.

#[derive(Serialize)]
struct MonomialConsistencyPayload {
    cases: u64,
    exact_alpha_matches: u64,
    exact_k_matches: u64,
    max_constant_rel_dev: f64,
}

fn monomial_consistency(
    seed: u64,
    cases: u64,
    max_arity: usize,
    max_exponent: u32,
    max_k: u32,
) -> anyhow::Result<ExperimentRun> {
    let mut stream = rng::Stream::new(rng::derive(seed, "experiment.monomial"));
    let mut exact_alpha = 0u64;
    let mut exact_k = 0u64;
    let mut max_dev: f64 = 0.0;
    for _ in 0..cases {
        let ell = 1 + stream.next_below(max_arity as u64) as usize;
        let samplers: Vec<HeavyTailSampler> = (0..ell)
            .map(|_| {
                let alpha = 0.3 + 1.6 * stream.next_uniform();
                let k = stream.next_below(max_k as u64 + 1) as f64;
                let cp = 0.2 + stream.next_uniform();
                let cm = if stream.next_uniform() < 0.2 { 0.0 } else { 0.2 + stream.next_uniform() };
                build_sampler(
                    TailSpec::new(alpha, k, cp, cm).unwrap(),
                    BodyConfig::Uniform,
                    stream.next_u64(),
                )
                .unwrap()
            })
            .collect();
        let dists: Vec<&dyn TailedLaw> = samplers.iter().map(|s| s as &dyn TailedLaw).collect();
        let mut exps: Vec<f64> =
            (0..ell).map(|_| stream.next_below(max_exponent as u64 + 1) as f64).collect();
        if exps.iter().all(|&e| e == 0.0) {
            exps[0] = 1.0;
        }
        let m = Monomial::new(exps.clone(), 1.0)?;
        let t = monomial_tail(&dists, &m)?;
        let f = Polynomial::new(ell, vec![m])?;
        let tails: Vec<(f64, f64)> = samplers
            .iter()
            .map(|s| (s.tail_spec().alpha, s.tail_spec().k))
            .collect();
        let summary = general_index_summary(&f, &tails)?;
        if t.alpha == summary.alpha_star {
            exact_alpha += 1;
        }
        if t.k == summary.k_star {
            exact_k += 1;
        }
        // Fold-order self-consistency of the constants.
        let mut factors: Vec<FactorTail> = Vec::new();
        for (j, &e) in exps.iter().enumerate() {
            if e > 0.0 {
                factors.push(FactorTail::power(dists[j], e as u32));
            }
        }
        while factors.len() > 1 {
            let i = stream.next_below(factors.len() as u64 - 1) as usize;
            let b = factors.remove(i + 1);
            let a = factors.remove(i);
            factors.insert(i, product(&a, &b)?);
        }
        let other = factors.pop().unwrap().tail;
        let scale = t.c_plus.abs().max(t.c_minus.abs()).max(1e-300);
        max_dev = max_dev
            .max((other.c_plus - t.c_plus).abs() / scale)
            .max((other.c_minus - t.c_minus).abs() / scale);
    }
    let passed = exact_alpha == cases && exact_k == cases && max_dev <= 1e-6;
    let detail = format!(
        "alpha exact {exact_alpha}/{cases}, k exact {exact_k}/{cases}, max constant dev {max_dev:.2e}"
    );
    let payload =
        MonomialConsistencyPayload { cases, exact_alpha_matches: exact_alpha, exact_k_matches: exact_k, max_constant_rel_dev: max_dev };
    Ok(ExperimentRun { name: "monomial-consistency", passed, detail, payload: to_payload(&payload)? })
}

// ---------------------------------------------------------------------------
// Criterion 3: the ln ln product diagnostic.

#[derive(Serialize)]
struct LoglogPayload {
    coefficient: f64,
    per_z: Vec<(f64, f64, f64)>, // (z, empirical ratio, exceedances)
    tolerance: f64,
}

fn loglog_check(
    seed: u64,
    draws: u64,
    thresholds: &[f64],
    c1: f64,
    c2: f64,
    alpha: f64,
    tolerance: f64,
) -> anyhow::Result<ExperimentRun> {
    let d1 = build_sampler(TailSpec::symmetric(alpha, 0.0, c1)?, BodyConfig::Uniform, seed)?;
    let t2 = TailSpec::diagnostic_negative_k(alpha, -1.0, c2, c2)?;
    let d2 = build_sampler(t2, BodyConfig::Uniform, seed ^ 0x9e37)?;
    let coeff = polytail::tailspec::loglog_product_diagnostic(c1, c2, alpha)?.coefficient;
    let key = rng::derive(seed, "experiment.loglog");
    let (k1, k2) = (rng::derive_idx(key, 1), rng::derive_idx(key, 2));
    let survival = empirical_survival(|i| d1.draw(k1, i) * d2.draw(k2, i), draws, thresholds);
    let mut per_z = Vec::new();
    let mut passed = true;
    for (&z, &emp) in thresholds.iter().zip(&survival) {
        let ratio = emp * z.powf(alpha) / z.ln().ln() / coeff;
        per_z.push((z, ratio, emp * draws as f64));
        if (ratio - 1.0).abs() > tolerance {
            passed = false;
        }
    }
    let detail = per_z
        .iter()
        .map(|(z, r, _)| format!("z={z:.0e}: ratio {r:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    let payload = LoglogPayload { coefficient: coeff, per_z, tolerance };
    Ok(ExperimentRun { name: "loglog-check", passed, detail, payload: to_payload(&payload)? })
}

// ---------------------------------------------------------------------------
// Criterion 4: coloring and smooth-number decomposition.

#[derive(Serialize)]
struct DecompositionPayload {
    per_ell: Vec<DecompositionEllResult>,
}

#[derive(Serialize)]
struct DecompositionEllResult {
    ell: u64,
    colors_used: u32,
    color_bound: u64,
    coloring_valid: bool,
    bijection_valid: bool,
    z0_density: f64,
    rho: f64,
    density_rel_err: f64,
}

fn decomposition_check(
    ells: &[u64],
    coloring_n: u64,
    factor_bound: u64,
    density_tolerance: f64,
) -> anyhow::Result<ExperimentRun> {
    let results: Vec<DecompositionEllResult> = ells
        .par_iter()
        .map(|&ell| {
            let coloring = conflict_coloring(ell, coloring_n).unwrap();
            let coloring_valid = verify_coloring(&coloring);
            let decomp = gamma_decomposition(ell, factor_bound).unwrap();
            let mut bijection_valid = true;
            let mut z0_count = 0u64;
            for n in 1..=factor_bound {
                let (i, nq) = decomp.factor(n);
                if i * nq != n || !decomp.in_z0(i) || decomp.smooth_rank(nq).is_none() {
                    bijection_valid = false;
                }
                if i == n {
                    z0_count += 1;
                }
            }
            let density = z0_count as f64 / factor_bound as f64;
            DecompositionEllResult {
                ell,
                colors_used: coloring.color_count,
                color_bound: ell * ell + 1,
                coloring_valid,
                bijection_valid,
                z0_density: density,
                rho: decomp.rho,
                density_rel_err: (density - decomp.rho).abs() / decomp.rho,
            }
        })
        .collect();
    let passed = results.iter().all(|r| {
        r.coloring_valid
            && r.bijection_valid
            && u64::from(r.colors_used) <= r.color_bound
            && r.density_rel_err <= density_tolerance
    });
    let detail = results
        .iter()
        .map(|r| format!("l={}: {} colors, density err {:.2e}", r.ell, r.colors_used, r.density_rel_err))
        .collect::<Vec<_>>()
        .join("; ");
    let payload = DecompositionPayload { per_ell: results };
    Ok(ExperimentRun { name: "decomposition-check", passed, detail, payload: to_payload(&payload)? })
}

// ---------------------------------------------------------------------------
// Criterion 5: classical stable limit recovery.

#[derive(Serialize)]
struct StableLimitPayload {
    ks_distance: f64,
    ks_tolerance: f64,
    cf_distance: f64,
    cf_tolerance: f64,
    replicates: u64,
    n: u64,
}

fn stable_limit_check(
    cfg: &ExperimentConfig,
    n: u64,
    replicates: u64,
    reference_draws: u64,
    ks_tolerance: f64,
    cf_tolerance: f64,
) -> anyhow::Result<ExperimentRun> {
    let sampler = sampler_from(cfg)?;
    let f = polynomial_from(cfg)?;
    let (_, norm) = make_normalization(&f, &sampler, n, cfg.seed, 1_000_000)?;
    let spec = EnsembleSpec {
        f: f.clone(),
        qcase: QCase::LDep,
        n,
        horizon: 1.0,
        checkpoints: vec![],
        jump_threshold: None,
    };
    let ens = replicate_ensemble(&spec, &sampler, &norm, cfg.seed, replicates)?;
    let ends: Vec<f64> = ens.iter().map(|r| r.end_sum).collect();

    let tail = sampler.tail_spec();
    let reference = StableSampler::new(
        tail.alpha,
        tail.c_plus,
        tail.c_minus,
        rng::derive(cfg.seed, "experiment.stable_reference"),
    )?;
    let refs = reference.sample(reference_draws as usize);
    let ks = ks_two_sample(&ends, &refs);
    let limit = LevyLimit::from_tail_spec(tail);
    let cfd = cf_distance(&ends, &limit, 1.0, &default_cf_grid());
    let passed = ks <= ks_tolerance && cfd <= cf_tolerance;
    let detail = format!("KS {ks:.4} (<= {ks_tolerance}), cf {cfd:.4} (<= {cf_tolerance})");
    let payload = StableLimitPayload {
        ks_distance: ks,
        ks_tolerance,
        cf_distance: cfd,
        cf_tolerance,
        replicates,
        n,
    };
    Ok(ExperimentRun { name: "stable-limit-check", passed, detail, payload: to_payload(&payload)? })
}

// ---------------------------------------------------------------------------
// Criterion 6: cluster constant, joint jumps and the rearrangement bound.

#[derive(Serialize)]
struct ClusterPayload {
    single_term_constant: f64,
    cluster_report: ClusterReport,
    expected_cluster_constant: f64,
    cluster_rel_err: f64,
    jump_scan: JumpScan,
    adjacent_to_single_ratio: f64,
    bound_replicates: u64,
    bound_failures: u64,
}

struct ClusterRepOutput {
    exceeding: Vec<Vec<f64>>, // per k-block
    blocks: Vec<u64>,
    single_count: u64,
    jumps: Vec<JumpEvent>,
}

#[allow(clippy::too_many_arguments)]
fn cluster_check(
    cfg: &ExperimentConfig,
    n: u64,
    replicates: u64,
    k_blocks: &[u64],
    delta: f64,
    tolerance: f64,
    bound_replicates: u64,
    bound_n: u64,
) -> anyhow::Result<ExperimentRun> {
    let sampler = sampler_from(cfg)?;
    let f = polynomial_from(cfg)?;
    let ell = f.arity as u64;
    let (summary, norm) = make_normalization(&f, &sampler, n, cfg.seed, 1_000_000)?;
    let alpha_star = summary.alpha_star;
    let b_n = norm.b_n;
    let coeffs: Vec<f64> = f.terms.iter().map(|t| t.coefficient).collect();
    let a_sum: f64 = coeffs.iter().zip(&norm.a_n).map(|(h, a)| h * a).sum();
    let steps = (n as f64).floor() as u64;

    let rep_key = rng::derive(cfg.seed, "replicate");
    let per_rep: Vec<ClusterRepOutput> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let x_key = rng::derive_idx(rep_key, rep);
            let mut acc: Vec<KahanSum> = vec![KahanSum::new(); k_blocks.len()];
            let mut exceeding: Vec<Vec<f64>> = vec![Vec::new(); k_blocks.len()];
            let mut blocks = vec![0u64; k_blocks.len()];
            let mut single_count = 0u64;
            let mut jumps = Vec::new();
            stream_paths(&f, QCase::LDep, n, 1.0, &sampler, x_key, &norm, |st| {
                let y_sum: f64 =
                    coeffs.iter().zip(st.y_theta).map(|(h, y)| h * y).sum::<f64>() - a_sum;
                for (ki, &k) in k_blocks.iter().enumerate() {
                    let pos = (st.m - 1) % (k + ell - 1);
                    if pos == 0 {
                        acc[ki] = KahanSum::new();
                    }
                    if pos < k {
                        acc[ki].add(y_sum);
                        if pos == k - 1 {
                            blocks[ki] += 1;
                            let scaled = acc[ki].value() / b_n;
                            if scaled.abs() > delta {
                                exceeding[ki].push(scaled);
                            }
                        }
                    }
                }
                // Single-term jump counting for the reference constant and
                // the joint scan.
                for (ti, (&y, a)) in st.y_theta.iter().zip(&norm.a_n).enumerate() {
                    let inc = (y - a) / b_n;
                    if inc.abs() >= delta {
                        if ti == 0 {
                            single_count += 1;
                        }
                        jumps.push(JumpEvent { step: st.m, theta: ti, size: inc });
                    }
                }
                Ok(())
            })?;
            Ok(ClusterRepOutput { exceeding, blocks, single_count, jumps })
        })
        .collect::<polytail::Result<Vec<_>>>()?;

    // Single-term Levy constant: N P{|X - a| > delta b_N} delta^alpha.
    let total_single: u64 = per_rep.iter().map(|r| r.single_count).sum();
    let single_constant = n as f64 * (total_single as f64 / (replicates as f64 * steps as f64))
        * delta.powf(alpha_star);

    let inputs: Vec<ClusterInput> = k_blocks
        .iter()
        .enumerate()
        .map(|(ki, &k)| ClusterInput {
            exceeding_sums: per_rep.iter().flat_map(|r| r.exceeding[ki].iter().copied()).collect(),
            total_blocks: per_rep.iter().map(|r| r.blocks[ki]).sum(),
            n,
            k_block: k,
        })
        .collect();
    let (_, report) = build_levy_limit_from_clusters(&inputs, alpha_star, delta)?;
    let largest = report.per_k.last().ok_or_else(|| anyhow!("no block sizes"))?;
    let cluster_total = largest.c_plus + largest.c_minus;
    let expected = 2f64.powf(alpha_star) * single_constant;
    let cluster_rel_err = (cluster_total - expected).abs() / expected;

    let jumps_per_rep: Vec<Vec<JumpEvent>> = per_rep.iter().map(|r| r.jumps.clone()).collect();
    let scan = joint_jump_scan(&jumps_per_rep, (0, 1), delta, n)?;
    let single_rate = scan.single_rate[0].max(scan.single_rate[1]);
    let adjacent_ratio = scan.adjacent_rate / single_rate.max(1e-300);

    // Rearrangement boundary bound across replicates.
    let (bound_summary, bound_norm) =
        make_normalization(&f, &sampler, bound_n, cfg.seed, 100_000)?;
    let bound_key = rng::derive(cfg.seed, "experiment.cluster.bound");
    let bound_failures: u64 = (0..bound_replicates)
        .into_par_iter()
        .map(|rep| {
            let x_key = rng::derive_idx(bound_key, rep);
            let re = rearranged_paths(&f, bound_n, 1.0, &sampler, &bound_summary, &bound_norm, x_key)
                .expect("rearranged paths");
            u64::from(!re.bound.holds)
        })
        .sum();

    let cluster_ok = cluster_rel_err <= tolerance;
    let jumps_ok = (0.5..=2.0).contains(&adjacent_ratio);
    let bound_ok = bound_failures == 0;
    let passed = cluster_ok && jumps_ok && bound_ok;
    let detail = format!(
        "cluster {cluster_total:.3} vs 2^a*single {expected:.3} (rel {cluster_rel_err:.3}), adjacent/single {adjacent_ratio:.2}, bound failures {bound_failures}/{bound_replicates}"
    );
    let payload = ClusterPayload {
        single_term_constant: single_constant,
        cluster_report: report,
        expected_cluster_constant: expected,
        cluster_rel_err,
        jump_scan: scan,
        adjacent_to_single_ratio: adjacent_ratio,
        bound_replicates,
        bound_failures,
    };
    Ok(ExperimentRun { name: "cluster-check", passed, detail, payload: to_payload(&payload)? })
}

// ---------------------------------------------------------------------------
// Criterion 7: increment dependence and its null calibration.

#[derive(Serialize)]
struct DependencePayload {
    main_test: DependenceTest,
    level: f64,
    null_rejections: u64,
    null_meta_replicates: u64,
    max_null_rejections: u64,
}

#[allow(clippy::too_many_arguments)]
fn dependence_check(
    cfg: &ExperimentConfig,
    n: u64,
    replicates: u64,
    permutations: u32,
    level: f64,
    null_meta_replicates: u64,
    null_replicates: u64,
    null_n: u64,
    max_null_rejections: u64,
) -> anyhow::Result<ExperimentRun> {
    let sampler = sampler_from(cfg)?;
    let f = polynomial_from(cfg)?;
    let (_, norm) = make_normalization(&f, &sampler, n, cfg.seed, 1_000_000)?;
    let spec = EnsembleSpec {
        f: f.clone(),
        qcase: QCase::ArithProg,
        n,
        horizon: 1.0,
        checkpoints: vec![0.25, 0.5, 1.0],
        jump_threshold: None,
    };
    let ens = replicate_ensemble(&spec, &sampler, &norm, cfg.seed, replicates)?;
    let inc_a: Vec<f64> = ens.iter().map(|r| r.checkpoint_sum[1] - r.checkpoint_sum[0]).collect();
    let inc_b: Vec<f64> = ens.iter().map(|r| r.checkpoint_sum[2] - r.checkpoint_sum[1]).collect();
    let main_test =
        increment_dependence(&inc_a, &inc_b, permutations, rng::derive(cfg.seed, "experiment.dep"))?;

    // Null calibration on an l = 1 iid control with the same tail.
    let control = Polynomial::new(1, vec![Monomial::new(vec![1.0], 1.0)?])?;
    let (_, null_norm) = make_normalization(&control, &sampler, null_n, cfg.seed, 100_000)?;
    let null_key = rng::derive(cfg.seed, "experiment.dep.null");
    let rejections: u64 = (0..null_meta_replicates)
        .map(|meta| {
            let seed = rng::derive_idx(null_key, meta);
            let spec = EnsembleSpec {
                f: control.clone(),
                qcase: QCase::LDep,
                n: null_n,
                horizon: 1.0,
                checkpoints: vec![0.25, 0.5, 1.0],
                jump_threshold: None,
            };
            let ens = replicate_ensemble(&spec, &sampler, &null_norm, seed, null_replicates)
                .expect("null ensemble");
            let a: Vec<f64> =
                ens.iter().map(|r| r.checkpoint_sum[1] - r.checkpoint_sum[0]).collect();
            let b: Vec<f64> =
                ens.iter().map(|r| r.checkpoint_sum[2] - r.checkpoint_sum[1]).collect();
            let t = increment_dependence(&a, &b, permutations, rng::derive_idx(seed, 1))
                .expect("null test");
            u64::from(t.p_value < level)
        })
        .sum();

    let passed = main_test.p_value < level && rejections <= max_null_rejections;
    let detail = format!(
        "dependence p = {:.2e} (stat {:.3}), null rejections {rejections}/{null_meta_replicates}",
        main_test.p_value, main_test.statistic
    );
    let payload = DependencePayload {
        main_test,
        level,
        null_rejections: rejections,
        null_meta_replicates,
        max_null_rejections,
    };
    Ok(ExperimentRun { name: "dependence-check", passed, detail, payload: to_payload(&payload)? })
}

// ---------------------------------------------------------------------------
// Criterion 8: q-truncation and block-gap sup-distance trends.

#[derive(Serialize)]
struct TrendPayload {
    q_list: Vec<usize>,
    q_medians: Vec<f64>,
    k_block_list: Vec<u64>,
    eta_medians: Vec<f64>,
}

fn trend_check(
    cfg: &ExperimentConfig,
    n: u64,
    replicates: u64,
    q_list: &[usize],
    k_block_list: &[u64],
) -> anyhow::Result<ExperimentRun> {
    let sampler = sampler_from(cfg)?;
    let f = polynomial_from(cfg)?;
    let ell = f.arity as u64;
    let (_, norm) = make_normalization(&f, &sampler, n, cfg.seed, 1_000_000)?;
    let b_n = norm.b_n;
    let nt = f.terms.len();
    let steps = n;
    let decomp = gamma_decomposition(ell, steps)?;
    let cutoffs: Vec<u64> = q_list
        .iter()
        .map(|&q| decomp.gamma1[(q.min(decomp.gamma1.len())) - 1])
        .collect();
    let rep_key = rng::derive(cfg.seed, "experiment.trend.q");

    // sup_t max_theta |Xi^q(theta, t) - Xi(theta, t)| per replicate and q.
    let q_sups: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let x_key = rng::derive_idx(rep_key, rep);
            let mut acc = vec![vec![KahanSum::new(); nt]; cutoffs.len()];
            let mut sups = vec![0.0f64; cutoffs.len()];
            stream_paths(&f, QCase::ArithProg, n, 1.0, &sampler, x_key, &norm, |st| {
                let (_, smooth) = decomp.factor(st.m);
                for (qi, &cut) in cutoffs.iter().enumerate() {
                    if smooth > cut {
                        // Omitted summand: the difference grows.
                        for (a, (&y, an)) in
                            acc[qi].iter_mut().zip(st.y_theta.iter().zip(&norm.a_n))
                        {
                            a.add(y - an);
                        }
                    }
                    let m = acc[qi]
                        .iter()
                        .fold(0.0f64, |m, a| m.max(a.value().abs()));
                    if m > sups[qi] {
                        sups[qi] = m;
                    }
                }
                Ok(())
            })
            .expect("trend stream");
            sups.iter().map(|s| s / b_n).collect()
        })
        .collect();
    let q_medians: Vec<f64> = (0..cutoffs.len())
        .map(|qi| median(&q_sups.iter().map(|r| r[qi]).collect::<Vec<_>>()))
        .collect();

    // sup_t |eta^k(t)| of the sum process per replicate and block size.
    let coeffs: Vec<f64> = f.terms.iter().map(|t| t.coefficient).collect();
    let a_sum: f64 = coeffs.iter().zip(&norm.a_n).map(|(h, a)| h * a).sum();
    let block_key = rng::derive(cfg.seed, "experiment.trend.block");
    let eta_sups: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let x_key = rng::derive_idx(block_key, rep);
            let mut acc = vec![KahanSum::new(); k_block_list.len()];
            let mut sups = vec![0.0f64; k_block_list.len()];
            stream_paths(&f, QCase::LDep, n, 1.0, &sampler, x_key, &norm, |st| {
                let y_sum: f64 =
                    coeffs.iter().zip(st.y_theta).map(|(h, y)| h * y).sum::<f64>() - a_sum;
                for (ki, &k) in k_block_list.iter().enumerate() {
                    if (st.m - 1) % (k + ell - 1) >= k {
                        acc[ki].add(y_sum);
                    }
                    let v = acc[ki].value().abs();
                    if v > sups[ki] {
                        sups[ki] = v;
                    }
                }
                Ok(())
            })
            .expect("block stream");
            sups.iter().map(|s| s / b_n).collect()
        })
        .collect();
    let eta_medians: Vec<f64> = (0..k_block_list.len())
        .map(|ki| median(&eta_sups.iter().map(|r| r[ki]).collect::<Vec<_>>()))
        .collect();

    let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let passed = monotone(&q_medians) && monotone(&eta_medians);
    let detail = format!("q medians {q_medians:?}, eta medians {eta_medians:?}");
    let payload = TrendPayload {
        q_list: q_list.to_vec(),
        q_medians,
        k_block_list: k_block_list.to_vec(),
        eta_medians,
    };
    Ok(ExperimentRun { name: "trend-check", passed, detail, payload: to_payload(&payload)? })
}

// ---------------------------------------------------------------------------
// Criterion 9: centering decay and the weak law of large numbers.

#[derive(Serialize)]
struct CenteringPayload {
    n_list: Vec<u64>,
    ratios: Vec<f64>,
    burn_in: usize,
    lln: LlnCheck,
}

fn centering_check(
    cfg: &ExperimentConfig,
    n_list: &[u64],
    lln_n: u64,
    lln_replicates: u64,
) -> anyhow::Result<ExperimentRun> {
    let sampler = sampler_from(cfg)?;
    let f = polynomial_from(cfg)?;
    let theta = 0usize;

    let mut ratios = Vec::new();
    for &n in n_list {
        let (_, norm) = make_normalization(&f, &sampler, n, cfg.seed, 10_000_000)?;
        ratios.push(norm.a_n[theta].abs() / norm.b_n);
    }
    // Monotone decrease toward 0 after burn-in.
    let mut burn_in = 0usize;
    while burn_in + 1 < ratios.len() && ratios[burn_in + 1] >= ratios[burn_in] {
        burn_in += 1;
    }
    let tail_monotone = ratios[burn_in..].windows(2).all(|w| w[1] < w[0]);
    let trend_ok = tail_monotone && burn_in <= 1 && ratios.last() < ratios.get(burn_in);

    // Weak law: median of S_N(theta, 1)/N near E[Z_theta] for alpha* > 1.
    let dists: Vec<&dyn TailedLaw> = vec![&sampler as &dyn TailedLaw; f.arity];
    let expected = monomial_mean(&dists, &f.terms[theta])?;
    let (_, lln_norm) = make_normalization(&f, &sampler, lln_n, cfg.seed, 1_000_000)?;
    let lln_key = rng::derive(cfg.seed, "experiment.lln");
    let scaled: Vec<f64> = (0..lln_replicates)
        .into_par_iter()
        .map(|rep| {
            let x_key = rng::derive_idx(lln_key, rep);
            let mut last = 0.0;
            stream_paths(&f, QCase::LDep, lln_n, 1.0, &sampler, x_key, &lln_norm, |st| {
                last = st.s_theta[theta];
                Ok(())
            })
            .expect("lln stream");
            last / lln_n as f64
        })
        .collect();
    let lln = lln_check(&scaled, expected);

    let passed = trend_ok && lln.within_3_iqr;
    let detail = format!(
        "a_N/b_N from {:.2e} to {:.2e} (burn-in {burn_in}), LLN median {:.4} vs {:.4} (IQR {:.4})",
        ratios.first().unwrap(),
        ratios.last().unwrap(),
        lln.median,
        lln.expected,
        lln.iqr
    );
    let payload = CenteringPayload { n_list: n_list.to_vec(), ratios, burn_in, lln };
    Ok(ExperimentRun { name: "centering-check", passed, detail, payload: to_payload(&payload)? })
}

// ---------------------------------------------------------------------------
// Criterion 10: byte-identical payloads across thread counts.

#[derive(Serialize)]
struct DeterminismPayload {
    thread_counts: [usize; 2],
    configs: Vec<String>,
    identical: Vec<bool>,
}

fn determinism_check(
    base_dir: &Path,
    thread_counts: [usize; 2],
    configs: &[String],
) -> anyhow::Result<ExperimentRun> {
    if configs.is_empty() {
        bail!("determinism check needs at least one config");
    }
    let mut identical = Vec::new();
    let mut all_ok = true;
    for rel in configs {
        let path = base_dir.join(rel);
        let cfg = ExperimentConfig::load(&path).map_err(|e| anyhow!(e))?;
        let mut payloads: Vec<Vec<u8>> = Vec::new();
        for &t in &thread_counts {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .context("building thread pool")?;
            let run = pool.install(|| run_experiment_spec(&cfg, base_dir))?;
            payloads.push(serde_json::to_vec(&run.payload)?);
        }
        let same = payloads.windows(2).all(|w| w[0] == w[1]);
        identical.push(same);
        if !same {
            all_ok = false;
        }
    }
    let detail = configs
        .iter()
        .zip(&identical)
        .map(|(c, ok)| format!("{c}: {}", if *ok { "identical" } else { "DIFFERS" }))
        .collect::<Vec<_>>()
        .join("; ");
    let payload = DeterminismPayload {
        thread_counts,
        configs: configs.to_vec(),
        identical: identical.clone(),
    };
    Ok(ExperimentRun { name: "determinism-check", passed: all_ok, detail, payload: to_payload(&payload)? })
}

// ---------------------------------------------------------------------------
// Shared helpers for the generic pipeline (used by the subcommands).

/// Builds sampler, polynomial and per-N normalizations for a config.
pub struct PipelineInputs {
    pub sampler: HeavyTailSampler,
    pub f: Polynomial,
    pub qcase: QCase,
    pub horizon: f64,
    pub replicates: u64,
    pub norms: Vec<(u64, NormalizationPair)>,
}

pub fn pipeline_inputs(cfg: &ExperimentConfig) -> anyhow::Result<PipelineInputs> {
    let sim = cfg.simulation.as_ref().ok_or_else(|| anyhow!("[simulation] section required"))?;
    let sampler = sampler_from(cfg)?;
    let f = polynomial_from(cfg)?;
    let a_n_draws = sim.a_n_draws.unwrap_or(1_000_000);
    let mut norms = Vec::new();
    for &n in &sim.n_list {
        let (_, norm) = make_normalization(&f, &sampler, n, cfg.seed, a_n_draws)?;
        norms.push((n, norm));
    }
    Ok(PipelineInputs {
        sampler,
        f,
        qcase: sim.qcase.into(),
        horizon: sim.horizon,
        replicates: sim.replicates,
        norms,
    })
}

/// b_N for reporting.
pub fn report_b_n(alpha_star: f64, k_star: f64, n: u64) -> f64 {
    scaling_b_n(alpha_star, k_star, n)
}
