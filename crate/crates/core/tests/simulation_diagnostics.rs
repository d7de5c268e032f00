//! Diagnostics exercised against simulated paths: cluster route
//! cross-validation, jump-scan behavior across q-cases, window dependence
//! nulls and sampling-band checks.

use polytail::diagnostics::{
    build_levy_limit_from_clusters, cf_distance, default_cf_grid, hill, increment_dependence,
    joint_jump_scan, tail_fit, ClusterInput, LevyLimit, TailSide,
};
use polytail::numeric::KahanSum;
use polytail::rng;
use polytail::sampler::{build_sampler, BodyConfig, HeavyTailSampler, StableSampler};
use polytail::simulator::{
    make_normalization, rearranged_paths, replicate_ensemble, stream_paths, EnsembleSpec,
    JumpEvent, QCase,
};
use polytail::tailspec::{Monomial, Polynomial, TailSpec, TailedLaw};
use rayon::prelude::*;

fn poly(terms: &[(&[f64], f64)]) -> Polynomial {
    let arity = terms[0].0.len();
    Polynomial::new(
        arity,
        terms.iter().map(|(e, h)| Monomial::new(e.to_vec(), *h).unwrap()).collect(),
    )
    .unwrap()
}

fn sym_sampler(alpha: f64, k: f64, c: f64) -> HeavyTailSampler {
    build_sampler(TailSpec::symmetric(alpha, k, c).unwrap(), BodyConfig::Uniform, 42).unwrap()
}

#[test]
fn tail_fit_with_log_factor() {
    // (alpha, k) = (1.5, 2): alpha within 0.1 and k within [1, 3] at 1e7
    // samples (log factors move slowly, hence the wide k band).
    let s = build_sampler(TailSpec::new(1.5, 2.0, 1.0, 0.0).unwrap(), BodyConfig::Uniform, 8)
        .unwrap();
    let key = rng::derive(5, "tailfit k2");
    let samples: Vec<f64> = (0..10_000_000u64).into_par_iter().map(|i| s.draw(key, i)).collect();
    let fit = tail_fit(&samples, TailSide::Plus).unwrap();
    assert!((fit.alpha_hat - 1.5).abs() < 0.1, "alpha {}", fit.alpha_hat);
    assert!((1.0..=3.0).contains(&fit.k_hat), "k {}", fit.k_hat);
}

#[test]
fn hill_bias_from_log_factor() {
    // (alpha, k) = (0.8, 1): the apparent local index is
    // alpha - k/ln(x) < alpha, so Hill reads the tail as heavier and lands
    // below alpha. Measured band at n = 2e6 with the default cut:
    // 0.68..0.76 (bias study; the magnitude shrinks only like 1/ln n).
    let s = build_sampler(TailSpec::new(0.8, 1.0, 0.5, 0.5).unwrap(), BodyConfig::Uniform, 9)
        .unwrap();
    let key = rng::derive(5, "hill bias");
    let n = 2_000_000u64;
    let samples: Vec<f64> = (0..n).into_par_iter().map(|i| s.draw(key, i)).collect();
    let est = hill(&samples, polytail::diagnostics::hill_default_m(n as usize)).unwrap();
    assert!(est < 0.8, "expected downward bias from the log factor, got {est}");
    assert!((0.65..=0.78).contains(&est), "bias outside the documented band: {est}");
}

/// Collects scaled block sums of the xi summands for one block size.
fn block_sums(
    f: &Polynomial,
    sampler: &HeavyTailSampler,
    n: u64,
    replicates: u64,
    seed: u64,
    k_block: u64,
    threshold: f64,
) -> ClusterInput {
    let (_, norm) = make_normalization(f, sampler, n, seed, 100_000).unwrap();
    let ell = f.arity as u64;
    let coeffs: Vec<f64> = f.terms.iter().map(|t| t.coefficient).collect();
    let a_sum: f64 = coeffs.iter().zip(&norm.a_n).map(|(h, a)| h * a).sum();
    let rep_key = rng::derive(seed, "replicate");
    let parts: Vec<(Vec<f64>, u64)> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let x_key = rng::derive_idx(rep_key, rep);
            let mut acc = KahanSum::new();
            let mut exceeding = Vec::new();
            let mut blocks = 0u64;
            stream_paths(f, QCase::LDep, n, 1.0, sampler, x_key, &norm, |st| {
                let y = coeffs.iter().zip(st.y_theta).map(|(h, v)| h * v).sum::<f64>() - a_sum;
                let pos = (st.m - 1) % (k_block + ell - 1);
                if pos == 0 {
                    acc = KahanSum::new();
                }
                if pos < k_block {
                    acc.add(y);
                    if pos == k_block - 1 {
                        blocks += 1;
                        let scaled = acc.value() / norm.b_n;
                        if scaled.abs() > threshold {
                            exceeding.push(scaled);
                        }
                    }
                }
                Ok(())
            })
            .unwrap();
            (exceeding, blocks)
        })
        .collect();
    let mut exceeding_sums = Vec::new();
    let mut total_blocks = 0;
    for (e, b) in parts {
        exceeding_sums.extend(e);
        total_blocks += b;
    }
    ClusterInput { exceeding_sums, total_blocks, n, k_block }
}

#[test]
fn cluster_route_matches_power_law_for_single_variable() {
    // l = 1: no clustering, so the block route reproduces the plain
    // power-law constant c+ + c-.
    let s = sym_sampler(1.5, 0.0, 0.5);
    let f = poly(&[(&[1.0], 1.0)]);
    let delta = 0.5;
    let input = block_sums(&f, &s, 20_000, 500, 33, 32, delta);
    let (limit, report) = build_levy_limit_from_clusters(&[input], 1.5, delta).unwrap();
    let est = report.per_k[0].c_plus + report.per_k[0].c_minus;
    assert!((est - 1.0).abs() < 0.25, "cluster estimate {est} vs 1.0");
    // Shape: the estimated measure is still power-law further out, i.e.
    // M*(x, inf) x^alpha stays near c+ + c- at 2 delta as well.
    let atoms = match &limit.measure {
        polytail::diagnostics::LevyMeasure::ClusterEstimate { atoms } => atoms.clone(),
        _ => panic!("expected a cluster estimate"),
    };
    let deeper: f64 =
        atoms.iter().filter(|(x, _)| x.abs() > 2.0 * delta).map(|(_, w)| w).sum::<f64>()
            * (2.0 * delta).powf(1.5);
    assert!((deeper - 1.0).abs() < 0.3, "tail shape estimate {deeper} vs 1.0");
}

#[test]
fn ldep_disjoint_windows_behave_as_null() {
    // F = x1 + x2 under l-dependence: increments over [T/4, T/2] and
    // [T/2, T] share only l boundary summands, so the dependence test sees
    // the null.
    let s = sym_sampler(1.5, 0.0, 0.5);
    let f = poly(&[(&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0)]);
    let n = 10_000;
    let (_, norm) = make_normalization(&f, &s, n, 5, 100_000).unwrap();
    let spec = EnsembleSpec {
        f: f.clone(),
        qcase: QCase::LDep,
        n,
        horizon: 1.0,
        checkpoints: vec![0.25, 0.5, 1.0],
        jump_threshold: None,
    };
    let ens = replicate_ensemble(&spec, &s, &norm, 77, 2_000).unwrap();
    let a: Vec<f64> = ens.iter().map(|r| r.checkpoint_sum[1] - r.checkpoint_sum[0]).collect();
    let b: Vec<f64> = ens.iter().map(|r| r.checkpoint_sum[2] - r.checkpoint_sum[1]).collect();
    let t = increment_dependence(&a, &b, 2_000, 13).unwrap();
    assert!(t.p_value > 0.01, "expected null behavior, p = {}", t.p_value);
}

#[test]
fn rearrangement_aligns_joint_jumps() {
    // Original F = x1 + x2 paths jump on adjacent steps; the rearranged
    // components share their summands, so their jumps coincide exactly.
    let s = sym_sampler(1.5, 0.0, 0.5);
    let f = poly(&[(&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0)]);
    let n = 50_000;
    let (summary, norm) = make_normalization(&f, &s, n, 5, 100_000).unwrap();
    let delta = 0.4;
    let mut orig_events: Vec<Vec<JumpEvent>> = Vec::new();
    let mut re_events: Vec<Vec<JumpEvent>> = Vec::new();
    for rep in 0..50u64 {
        let x_key = rng::derive_idx(rng::derive(5, "rearr scan"), rep);
        let re = rearranged_paths(&f, n, 1.0, &s, &summary, &norm, x_key).unwrap();
        let direct =
            polytail::simulator::simulate_paths(&f, QCase::LDep, n, 1.0, &s, &norm, x_key, false)
                .unwrap();
        let events = |b: &polytail::simulator::PathBundle| -> Vec<JumpEvent> {
            let mut out = Vec::new();
            for (ti, p) in b.per_theta.iter().enumerate() {
                for m in 1..p.values.len() {
                    let inc = p.values[m] - p.values[m - 1];
                    if inc.abs() >= delta {
                        out.push(JumpEvent { step: m as u64, theta: ti, size: inc });
                    }
                }
            }
            out
        };
        orig_events.push(events(&direct));
        re_events.push(events(&re.bundle));
    }
    let orig = joint_jump_scan(&orig_events, (0, 1), delta, n).unwrap();
    let re = joint_jump_scan(&re_events, (0, 1), delta, n).unwrap();
    let single = orig.single_rate[0].max(orig.single_rate[1]);
    // Original: adjacent joint jumps at the single-jump rate, none
    // simultaneous; rearranged: all simultaneous.
    assert!(orig.adjacent_rate > 0.5 * single, "orig adjacent {}", orig.adjacent_rate);
    assert!(orig.simultaneous_rate < 0.2 * single);
    assert!(re.simultaneous_rate > 0.8 * single, "re simultaneous {}", re.simultaneous_rate);
}

#[test]
fn independent_components_lose_joint_jumps_with_n() {
    // F = x1 x2 + x3 x4: the two monomials share no variable at equal n, so
    // the simultaneous joint-jump rate decays as N grows.
    let s = sym_sampler(1.2, 0.0, 0.5);
    let f = poly(&[(&[1.0, 1.0, 0.0, 0.0], 1.0), (&[0.0, 0.0, 1.0, 1.0], 1.0)]);
    let delta = 0.25;
    let mut rates = Vec::new();
    for &n in &[1_000u64, 10_000, 100_000] {
        let (_, norm) = make_normalization(&f, &s, n, 5, 100_000).unwrap();
        let spec = EnsembleSpec {
            f: f.clone(),
            qcase: QCase::LDep,
            n,
            horizon: 1.0,
            checkpoints: vec![],
            jump_threshold: Some(delta),
        };
        let replicates = 4_000_000 / n;
        let ens = replicate_ensemble(&spec, &s, &norm, 99, replicates).unwrap();
        let jumps: Vec<Vec<JumpEvent>> = ens.into_iter().map(|r| r.jumps).collect();
        let scan = joint_jump_scan(&jumps, (0, 1), delta, n).unwrap();
        rates.push(scan.simultaneous_rate);
    }
    assert!(
        rates[0] > rates[1] && rates[1] > rates[2],
        "rates not decreasing: {rates:?}"
    );
}

#[test]
fn jump_scan_monotone_in_delta_and_replicate_order_invariant() {
    let s = sym_sampler(1.5, 0.0, 0.5);
    let f = poly(&[(&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0)]);
    let n = 5_000;
    let (_, norm) = make_normalization(&f, &s, n, 5, 100_000).unwrap();
    let spec = EnsembleSpec {
        f: f.clone(),
        qcase: QCase::LDep,
        n,
        horizon: 1.0,
        checkpoints: vec![],
        jump_threshold: Some(0.1),
    };
    let ens = replicate_ensemble(&spec, &s, &norm, 3, 200).unwrap();
    let jumps: Vec<Vec<JumpEvent>> = ens.into_iter().map(|r| r.jumps).collect();
    let mut counts = Vec::new();
    for delta in [0.1, 0.2, 0.4, 0.8] {
        let scan = joint_jump_scan(&jumps, (0, 1), delta, n).unwrap();
        counts.push((scan.single_counts, scan.adjacent_count));
    }
    for w in counts.windows(2) {
        assert!(w[1].0[0] <= w[0].0[0]);
        assert!(w[1].1 <= w[0].1);
    }
    // Permuting the replicate order never changes the counts.
    let mut shuffled = jumps.clone();
    shuffled.reverse();
    let a = joint_jump_scan(&jumps, (0, 1), 0.2, n).unwrap();
    let b = joint_jump_scan(&shuffled, (0, 1), 0.2, n).unwrap();
    assert_eq!(a.adjacent_count, b.adjacent_count);
    assert_eq!(a.simultaneous_count, b.simultaneous_count);
    assert_eq!(a.single_counts, b.single_counts);
}

#[test]
fn cf_distance_between_twin_ensembles_within_sampling_band() {
    // Two independent ensembles from the same configuration stay within
    // twice the 2/sqrt(R) band of each other against the same limit.
    let r = 5_000usize;
    let tail = TailSpec::symmetric(1.4, 0.0, 0.5).unwrap();
    let s1 = StableSampler::new(1.4, 0.5, 0.5, 101).unwrap();
    let s2 = StableSampler::new(1.4, 0.5, 0.5, 202).unwrap();
    let limit = LevyLimit::from_tail_spec(tail);
    let grid = default_cf_grid();
    let d1 = cf_distance(&s1.sample(r), &limit, 1.0, &grid);
    let d2 = cf_distance(&s2.sample(r), &limit, 1.0, &grid);
    let band = 2.0 / (r as f64).sqrt();
    assert!((d1 - d2).abs() <= 2.0 * band, "d1 {d1} d2 {d2}");
    assert!(d1 <= 3.0 * band && d2 <= 3.0 * band);
}
