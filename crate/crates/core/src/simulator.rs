//! Paths of the nonconventional sums S_N(theta, t), their normalized versions
//! Xi_N(theta, t) = (S_N(theta, t) - [Nt] a_N^theta)/b_N and the sum process
//! xi_N = sum_theta h_theta Xi_N(theta, .), for the two index maps
//! q_j(n) = n + j - 1 and q_j(n) = j n. Also the rearrangement, the
//! block/gap decomposition and the smooth-number truncation used to probe
//! the limit theorems.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexcalc::{gamma_decomposition, iid_index_summary, IndexSummary};
use crate::numeric::KahanSum;
use crate::rng;
use crate::sampler::{normalization, HeavyTailSampler, NormalizationPair, TRUNCATED_MEAN_MC_DRAWS};
use crate::tailspec::{Polynomial, TailedLaw};

/// The two supported index maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QCase {
    /// q_j(n) = n + j - 1 (summands form an l-dependent stationary sequence).
    LDep,
    /// q_j(n) = j n (arithmetic progressions; long-range dependence).
    ArithProg,
}

impl QCase {
    #[inline]
    pub fn index(self, j: usize, n: u64) -> u64 {
        match self {
            QCase::LDep => n + j as u64, // j is the 0-based slot
            QCase::ArithProg => (j as u64 + 1) * n,
        }
    }
}

/// Right-continuous step path on [0, T] with values at the grid t = m/N.
#[derive(Clone, Debug, Serialize)]
pub struct CadlagPath {
    pub grid_n: u64,
    pub horizon: f64,
    /// values[m] is the path value at t = m/N; values[0] = 0.
    pub values: Vec<f64>,
}

impl CadlagPath {
    pub fn value_at(&self, t: f64) -> f64 {
        let m = ((t * self.grid_n as f64).floor() as usize).min(self.values.len() - 1);
        self.values[m]
    }

    pub fn end_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn sup_abs_diff(&self, other: &CadlagPath) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// The simulated bundle: one normalized path per monomial plus their
/// h-weighted sum, sharing a normalization pair.
#[derive(Clone, Debug)]
pub struct PathBundle {
    pub f: Polynomial,
    pub qcase: QCase,
    pub n: u64,
    pub horizon: f64,
    pub x_key: u64,
    pub norm: NormalizationPair,
    pub per_theta: Vec<CadlagPath>,
    pub sum: CadlagPath,
    /// Raw S_N(theta, .) sums, kept only on request.
    pub raw_per_theta: Option<Vec<Vec<f64>>>,
}

/// Per-term compiled evaluator: (slot, integer exponent) pairs plus real
/// powers, so the hot loop avoids re-inspecting f64 exponents.
struct CompiledTerm {
    int_factors: Vec<(usize, i32)>,
    real_factors: Vec<(usize, f64)>,
    coefficient: f64,
}

fn compile_terms(f: &Polynomial) -> Vec<CompiledTerm> {
    f.terms
        .iter()
        .map(|t| {
            let mut int_factors = Vec::new();
            let mut real_factors = Vec::new();
            for (j, &s) in t.exponents.iter().enumerate() {
                if s == 0.0 {
                    continue;
                }
                if s.fract() == 0.0 && s <= i32::MAX as f64 {
                    int_factors.push((j, s as i32));
                } else {
                    real_factors.push((j, s));
                }
            }
            CompiledTerm { int_factors, real_factors, coefficient: t.coefficient }
        })
        .collect()
}

impl CompiledTerm {
    #[inline]
    fn eval(&self, window: &[f64]) -> f64 {
        let mut v = 1.0;
        for &(j, e) in &self.int_factors {
            v *= window[j].powi(e);
        }
        for &(j, e) in &self.real_factors {
            v *= window[j].powf(e);
        }
        v
    }
}

/// State handed to the per-step visitor of the streaming core.
pub struct StepState<'a> {
    /// Grid step m (1-based; t = m/N).
    pub m: u64,
    /// Xi_N(theta, m/N) for each term.
    pub xi_theta: &'a [f64],
    /// xi_N(m/N) = sum_theta h_theta Xi_N(theta, m/N).
    pub xi_sum: f64,
    /// Raw monomial values Y_m(theta) of this step.
    pub y_theta: &'a [f64],
    /// Raw partial sums S_m(theta).
    pub s_theta: &'a [f64],
}

/// Streams one realization without materializing paths. The visitor is
/// called once per step m = 1..=floor(N T).
#[allow(clippy::too_many_arguments)]
pub fn stream_paths<V: FnMut(&StepState) -> Result<()>>(
    f: &Polynomial,
    qcase: QCase,
    n: u64,
    horizon: f64,
    sampler: &HeavyTailSampler,
    x_key: u64,
    norm: &NormalizationPair,
    mut visit: V,
) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument("N must be at least 2".into()));
    }
    if horizon <= 0.0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let steps = (n as f64 * horizon).floor() as u64;
    let ell = f.arity;
    let terms = compile_terms(f);
    let inv_b = 1.0 / norm.b_n;

    let mut window = vec![0.0f64; ell];
    if qcase == QCase::LDep {
        // Pre-fill X_1 .. X_{l-1}; the loop shifts and draws the edge.
        for (j, w) in window.iter_mut().enumerate().skip(1) {
            *w = sampler.draw_with_key(x_key, j as u64);
        }
    }

    let mut sums: Vec<KahanSum> = vec![KahanSum::new(); terms.len()];
    let mut xi_theta = vec![0.0f64; terms.len()];
    let mut y_theta = vec![0.0f64; terms.len()];
    let mut s_theta = vec![0.0f64; terms.len()];

    for m in 1..=steps {
        match qcase {
            QCase::LDep => {
                window.copy_within(1.., 0);
                window[ell - 1] = sampler.draw_with_key(x_key, m + ell as u64 - 1);
            }
            QCase::ArithProg => {
                for (j, w) in window.iter_mut().enumerate() {
                    *w = sampler.draw_with_key(x_key, (j as u64 + 1) * m);
                }
            }
        }
        let mut xi_sum = 0.0;
        for (ti, term) in terms.iter().enumerate() {
            let y = term.eval(&window);
            if !y.is_finite() {
                return Err(Error::NonFiniteSummand { index: m, value: y });
            }
            y_theta[ti] = y;
            sums[ti].add(y);
            let s = sums[ti].value();
            s_theta[ti] = s;
            let xi = (s - m as f64 * norm.a_n[ti]) * inv_b;
            xi_theta[ti] = xi;
            xi_sum += term.coefficient * xi;
        }
        visit(&StepState { m, xi_theta: &xi_theta, xi_sum, y_theta: &y_theta, s_theta: &s_theta })?;
    }
    Ok(())
}

/// Computes the iid index summary and normalization pair for (F, sampler, N).
pub fn make_normalization(
    f: &Polynomial,
    sampler: &HeavyTailSampler,
    n: u64,
    seed: u64,
    mc_draws: u64,
) -> Result<(IndexSummary, NormalizationPair)> {
    let tail = sampler.tail_spec();
    let summary = iid_index_summary(f, tail.alpha, tail.k)?;
    let laws: Vec<&dyn TailedLaw> = vec![sampler as &dyn TailedLaw; f.arity];
    let samplers: Vec<&HeavyTailSampler> = vec![sampler; f.arity];
    let norm = normalization(&summary, n, &laws, f, &samplers, seed, mc_draws)?;
    Ok((summary, norm))
}

/// Builds the full path bundle for one realization.
#[allow(clippy::too_many_arguments)]
pub fn simulate_paths(
    f: &Polynomial,
    qcase: QCase,
    n: u64,
    horizon: f64,
    sampler: &HeavyTailSampler,
    norm: &NormalizationPair,
    x_key: u64,
    keep_raw: bool,
) -> Result<PathBundle> {
    let steps = (n as f64 * horizon).floor() as usize;
    let mut per_theta: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); f.terms.len()];
    let mut sum_path = Vec::with_capacity(steps + 1);
    let mut raw: Option<Vec<Vec<f64>>> = if keep_raw {
        Some(vec![Vec::with_capacity(steps + 1); f.terms.len()])
    } else {
        None
    };
    for p in per_theta.iter_mut() {
        p.push(0.0);
    }
    sum_path.push(0.0);
    if let Some(r) = raw.as_mut() {
        for p in r.iter_mut() {
            p.push(0.0);
        }
    }
    stream_paths(f, qcase, n, horizon, sampler, x_key, norm, |st| {
        for (ti, p) in per_theta.iter_mut().enumerate() {
            p.push(st.xi_theta[ti]);
        }
        sum_path.push(st.xi_sum);
        if let Some(r) = raw.as_mut() {
            for (ti, p) in r.iter_mut().enumerate() {
                p.push(st.s_theta[ti]);
            }
        }
        Ok(())
    })?;
    let mk = |values: Vec<f64>| CadlagPath { grid_n: n, horizon, values };
    Ok(PathBundle {
        f: f.clone(),
        qcase,
        n,
        horizon,
        x_key,
        norm: norm.clone(),
        per_theta: per_theta.into_iter().map(mk).collect(),
        sum: mk(sum_path),
        raw_per_theta: raw,
    })
}

/// Offsets and families of the rearrangement: extremal monomials whose
/// J-sets differ by a constant shift get their summands realigned so the
/// shared extreme factors hit at the same step.
#[derive(Clone, Debug, Serialize)]
pub struct RearrangementPlan {
    /// Per-term shift a_theta (0 outside the families).
    pub offsets: Vec<u64>,
    /// The non-singleton families (term positions).
    pub families: Vec<Vec<usize>>,
}

/// Builds the rearrangement plan from the iid index summary.
pub fn rearrangement_plan(summary: &IndexSummary) -> RearrangementPlan {
    let mut offsets = vec![0u64; summary.per_theta.len()];
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for &ti in &summary.theta_star {
        let js = &summary.per_theta[ti].j_set;
        let shape: Vec<usize> = js.iter().map(|&j| j - js[0]).collect();
        match groups.iter_mut().find(|(s, _)| *s == shape) {
            Some((_, members)) => members.push(ti),
            None => groups.push((shape, vec![ti])),
        }
    }
    let mut families = Vec::new();
    for (_, members) in groups {
        if members.len() < 2 {
            continue;
        }
        let max_first = members
            .iter()
            .map(|&ti| summary.per_theta[ti].j_set[0])
            .max()
            .unwrap();
        for &ti in &members {
            offsets[ti] = (max_first - summary.per_theta[ti].j_set[0]) as u64;
        }
        families.push(members);
    }
    RearrangementPlan { offsets, families }
}

/// Pathwise check of the boundary bound: |S_N(theta, t) - S'_N(theta, t)|
/// must not exceed the sum of the head monomials (n <= 2l) plus the tail
/// monomials (m <= n <= m + l) at every grid point.
#[derive(Clone, Debug, Serialize)]
pub struct RearrangedBoundCheck {
    pub holds: bool,
    /// max over (theta, m) of |S - S'| - bound; negative when the bound holds.
    pub max_slack: f64,
}

/// The rearranged bundle for the l-dependence case, its plan, and the
/// pathwise boundary-bound verification.
pub struct RearrangedPaths {
    pub bundle: PathBundle,
    pub plan: RearrangementPlan,
    pub bound: RearrangedBoundCheck,
}

/// Builds the rearranged sums S'_N(theta, t) = sum_{l <= n <= Nt} Y_{n+a}(theta)
/// (l-dependence case only) and verifies the boundary bound against the
/// original sums.
pub fn rearranged_paths(
    f: &Polynomial,
    n: u64,
    horizon: f64,
    sampler: &HeavyTailSampler,
    summary: &IndexSummary,
    norm: &NormalizationPair,
    x_key: u64,
) -> Result<RearrangedPaths> {
    let plan = rearrangement_plan(summary);
    let steps = (n as f64 * horizon).floor() as usize;
    let ell = f.arity;
    let a_max = plan.offsets.iter().copied().max().unwrap_or(0) as usize;
    let lookahead = a_max.max(ell);
    let terms = compile_terms(f);

    // Evaluate Y_n(theta) for n = 1..=steps+lookahead once.
    let total = steps + lookahead;
    let mut ys: Vec<Vec<f64>> = vec![Vec::with_capacity(total + 1); terms.len()];
    for y in ys.iter_mut() {
        y.push(0.0); // index 0 unused
    }
    let mut window = vec![0.0f64; ell];
    for (j, w) in window.iter_mut().enumerate().skip(1) {
        *w = sampler.draw_with_key(x_key, j as u64);
    }
    for m in 1..=total as u64 {
        window.copy_within(1.., 0);
        window[ell - 1] = sampler.draw_with_key(x_key, m + ell as u64 - 1);
        for (ti, term) in terms.iter().enumerate() {
            let y = term.eval(&window);
            if !y.is_finite() {
                return Err(Error::NonFiniteSummand { index: m, value: y });
            }
            ys[ti].push(y);
        }
    }

    // Head part of the bound: sum_{1 <= n <= 2l} |Y_n(theta)|.
    let heads: Vec<f64> = ys
        .iter()
        .map(|y| y[1..=(2 * ell).min(total)].iter().map(|v| v.abs()).sum())
        .collect();

    let mut originals: Vec<KahanSum> = vec![KahanSum::new(); terms.len()];
    let mut rearranged: Vec<KahanSum> = vec![KahanSum::new(); terms.len()];
    let mut paths: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); terms.len()];
    let mut sum_path = Vec::with_capacity(steps + 1);
    for p in paths.iter_mut() {
        p.push(0.0);
    }
    sum_path.push(0.0);
    let mut max_slack = f64::NEG_INFINITY;
    let inv_b = 1.0 / norm.b_n;
    for m in 1..=steps {
        let mut xi_sum = 0.0;
        for ti in 0..terms.len() {
            originals[ti].add(ys[ti][m]);
            let a = plan.offsets[ti] as usize;
            if m >= ell {
                rearranged[ti].add(ys[ti][m + a]);
            }
            let s = originals[ti].value();
            let s_re = rearranged[ti].value();
            let tail_terms: f64 = ys[ti][m..=(m + ell).min(total)].iter().map(|v| v.abs()).sum();
            let bound = heads[ti] + tail_terms;
            let diff = (s - s_re).abs();
            // Small allowance for the floating-point error of the two
            // compensated sums being compared.
            let slack = diff - bound - 1e-12 * (s.abs() + s_re.abs() + 1.0);
            if slack > max_slack {
                max_slack = slack;
            }
            let included = (m as u64).saturating_sub(ell as u64 - 1) as f64;
            let xi = (s_re - included * norm.a_n[ti]) * inv_b;
            paths[ti].push(xi);
            xi_sum += terms[ti].coefficient * xi;
        }
        sum_path.push(xi_sum);
    }

    let mk = |values: Vec<f64>| CadlagPath { grid_n: n, horizon, values };
    let bundle = PathBundle {
        f: f.clone(),
        qcase: QCase::LDep,
        n,
        horizon,
        x_key,
        norm: norm.clone(),
        per_theta: paths.into_iter().map(mk).collect(),
        sum: mk(sum_path),
        raw_per_theta: None,
    };
    Ok(RearrangedPaths {
        bundle,
        plan,
        bound: RearrangedBoundCheck { holds: max_slack <= 0.0, max_slack },
    })
}

/// True when summand index n (1-based) falls in the kept block segment
/// B+(r) for block size k_block and gap l-1.
#[inline]
pub fn in_block_segment(n: u64, k_block: u64, ell: u64) -> bool {
    (n - 1) % (k_block + ell - 1) < k_block
}

/// Splits the sum over blocks of size k_block and gaps of size l-1:
/// xi^k sums over the blocks, eta^k over the gaps, and xi = xi^k + eta^k
/// at every grid point.
pub fn block_decomposition(
    f: &Polynomial,
    n: u64,
    horizon: f64,
    sampler: &HeavyTailSampler,
    norm: &NormalizationPair,
    x_key: u64,
    k_block: u64,
) -> Result<(PathBundle, PathBundle)> {
    if k_block < 1 {
        return Err(Error::InvalidArgument("k_block must be >= 1".into()));
    }
    let ell = f.arity as u64;
    let steps = (n as f64 * horizon).floor() as usize;
    let nt = f.terms.len();
    let mut xi_sums: Vec<KahanSum> = vec![KahanSum::new(); nt];
    let mut eta_sums: Vec<KahanSum> = vec![KahanSum::new(); nt];
    let mut xi_counts = vec![0u64; nt];
    let mut eta_counts = vec![0u64; nt];
    let mut xi_paths: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); nt];
    let mut eta_paths: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); nt];
    let mut xi_sum_path = Vec::with_capacity(steps + 1);
    let mut eta_sum_path = Vec::with_capacity(steps + 1);
    for p in xi_paths.iter_mut().chain(eta_paths.iter_mut()) {
        p.push(0.0);
    }
    xi_sum_path.push(0.0);
    eta_sum_path.push(0.0);
    let inv_b = 1.0 / norm.b_n;
    let coeffs: Vec<f64> = f.terms.iter().map(|t| t.coefficient).collect();
    stream_paths(f, QCase::LDep, n, horizon, sampler, x_key, norm, |st| {
        let kept = in_block_segment(st.m, k_block, ell);
        let mut xs = 0.0;
        let mut es = 0.0;
        for ti in 0..nt {
            if kept {
                xi_sums[ti].add(st.y_theta[ti]);
                xi_counts[ti] += 1;
            } else {
                eta_sums[ti].add(st.y_theta[ti]);
                eta_counts[ti] += 1;
            }
            let xi = (xi_sums[ti].value() - xi_counts[ti] as f64 * norm.a_n[ti]) * inv_b;
            let eta = (eta_sums[ti].value() - eta_counts[ti] as f64 * norm.a_n[ti]) * inv_b;
            xi_paths[ti].push(xi);
            eta_paths[ti].push(eta);
            xs += coeffs[ti] * xi;
            es += coeffs[ti] * eta;
        }
        xi_sum_path.push(xs);
        eta_sum_path.push(es);
        Ok(())
    })?;
    let mk = |values: Vec<f64>| CadlagPath { grid_n: n, horizon, values };
    let mk_bundle = |paths: Vec<Vec<f64>>, sum: Vec<f64>| PathBundle {
        f: f.clone(),
        qcase: QCase::LDep,
        n,
        horizon,
        x_key,
        norm: norm.clone(),
        per_theta: paths.into_iter().map(mk).collect(),
        sum: mk(sum),
        raw_per_theta: None,
    };
    Ok((mk_bundle(xi_paths, xi_sum_path), mk_bundle(eta_paths, eta_sum_path)))
}

/// Keeps only summands n = i n_j with i coprime to the primes <= l and
/// j <= q (arithmetic-progression case).
pub fn q_truncated_paths(
    f: &Polynomial,
    n: u64,
    horizon: f64,
    sampler: &HeavyTailSampler,
    norm: &NormalizationPair,
    x_key: u64,
    q: usize,
) -> Result<PathBundle> {
    if q < 1 {
        return Err(Error::InvalidArgument("q must be >= 1".into()));
    }
    let steps_u = (n as f64 * horizon).floor() as u64;
    let decomp = gamma_decomposition(f.arity as u64, steps_u.max(1))?;
    let q = q.min(decomp.gamma1.len());
    let cutoff = decomp.gamma1[q - 1];
    let nt = f.terms.len();
    let steps = steps_u as usize;
    let mut sums: Vec<KahanSum> = vec![KahanSum::new(); nt];
    let mut counts = vec![0u64; nt];
    let mut paths: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); nt];
    let mut sum_path = Vec::with_capacity(steps + 1);
    for p in paths.iter_mut() {
        p.push(0.0);
    }
    sum_path.push(0.0);
    let inv_b = 1.0 / norm.b_n;
    let coeffs: Vec<f64> = f.terms.iter().map(|t| t.coefficient).collect();
    stream_paths(f, QCase::ArithProg, n, horizon, sampler, x_key, norm, |st| {
        let (_, smooth) = decomp.factor(st.m);
        let retained = smooth <= cutoff;
        let mut xs = 0.0;
        for ti in 0..nt {
            if retained {
                sums[ti].add(st.y_theta[ti]);
                counts[ti] += 1;
            }
            let xi = (sums[ti].value() - counts[ti] as f64 * norm.a_n[ti]) * inv_b;
            paths[ti].push(xi);
            xs += coeffs[ti] * xi;
        }
        sum_path.push(xs);
        Ok(())
    })?;
    let mk = |values: Vec<f64>| CadlagPath { grid_n: n, horizon, values };
    Ok(PathBundle {
        f: f.clone(),
        qcase: QCase::ArithProg,
        n,
        horizon,
        x_key,
        norm: norm.clone(),
        per_theta: paths.into_iter().map(mk).collect(),
        sum: mk(sum_path),
        raw_per_theta: None,
    })
}

/// A jump of a component path above the reporting threshold.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct JumpEvent {
    pub step: u64,
    pub theta: usize,
    /// Increment of Xi_N(theta, .) at this step (units of b_N).
    pub size: f64,
}

/// Compact per-replicate summary for ensemble runs: checkpoint values,
/// end values and the jump events above a threshold.
#[derive(Clone, Debug, Serialize)]
pub struct ReplicateSummary {
    pub replicate: u64,
    pub x_key: u64,
    pub end_theta: Vec<f64>,
    pub end_sum: f64,
    pub checkpoint_sum: Vec<f64>,
    pub checkpoint_theta: Vec<Vec<f64>>,
    pub jumps: Vec<JumpEvent>,
}

/// Ensemble request: which checkpoints to record and whether to collect
/// jump events (threshold in Xi units).
#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    pub f: Polynomial,
    pub qcase: QCase,
    pub n: u64,
    pub horizon: f64,
    pub checkpoints: Vec<f64>,
    pub jump_threshold: Option<f64>,
}

/// Runs R independent replicates with per-replicate keys derived from the
/// master seed; results are indexed by replicate and independent of the
/// execution order and thread count.
pub fn replicate_ensemble(
    spec: &EnsembleSpec,
    sampler: &HeavyTailSampler,
    norm: &NormalizationPair,
    master_seed: u64,
    replicates: u64,
) -> Result<Vec<ReplicateSummary>> {
    if replicates < 1 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    let rep_key_base = rng::derive(master_seed, "replicate");
    let steps = (spec.n as f64 * spec.horizon).floor() as u64;
    let checkpoint_steps: Vec<u64> = spec
        .checkpoints
        .iter()
        .map(|&t| ((t * spec.n as f64).floor() as u64).min(steps))
        .collect();
    (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let x_key = rng::derive_idx(rep_key_base, rep);
            let nt = spec.f.terms.len();
            let mut cp_sum = vec![0.0; checkpoint_steps.len()];
            let mut cp_theta = vec![vec![0.0; nt]; checkpoint_steps.len()];
            let mut jumps = Vec::new();
            let mut last_xi = vec![0.0f64; nt];
            let mut end_theta = vec![0.0; nt];
            let mut end_sum = 0.0;
            stream_paths(
                &spec.f,
                spec.qcase,
                spec.n,
                spec.horizon,
                sampler,
                x_key,
                norm,
                |st| {
                    if let Some(delta) = spec.jump_threshold {
                        for (ti, (last, &xi)) in
                            last_xi.iter_mut().zip(st.xi_theta).enumerate()
                        {
                            let inc = xi - *last;
                            if inc.abs() >= delta {
                                jumps.push(JumpEvent { step: st.m, theta: ti, size: inc });
                            }
                            *last = xi;
                        }
                    }
                    for (ci, &cs) in checkpoint_steps.iter().enumerate() {
                        if st.m == cs {
                            cp_sum[ci] = st.xi_sum;
                            cp_theta[ci].copy_from_slice(st.xi_theta);
                        }
                    }
                    if st.m == steps {
                        end_theta.copy_from_slice(st.xi_theta);
                        end_sum = st.xi_sum;
                    }
                    Ok(())
                },
            )?;
            Ok(ReplicateSummary {
                replicate: rep,
                x_key,
                end_theta,
                end_sum,
                checkpoint_sum: cp_sum,
                checkpoint_theta: cp_theta,
                jumps,
            })
        })
        .collect()
}

/// End values of xi_N(T) across an ensemble.
pub fn ensemble_end_values(summaries: &[ReplicateSummary]) -> Vec<f64> {
    summaries.iter().map(|s| s.end_sum).collect()
}

pub const DEFAULT_A_N_DRAWS: u64 = TRUNCATED_MEAN_MC_DRAWS;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{build_sampler, BodyConfig};
    use crate::tailspec::{Monomial, TailSpec};

    fn poly(terms: &[(&[f64], f64)]) -> Polynomial {
        let arity = terms[0].0.len();
        Polynomial::new(
            arity,
            terms
                .iter()
                .map(|(e, h)| Monomial::new(e.to_vec(), *h).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn sampler(alpha: f64, k: f64) -> HeavyTailSampler {
        build_sampler(TailSpec::symmetric(alpha, k, 0.5).unwrap(), BodyConfig::Uniform, 42).unwrap()
    }

    #[test]
    fn qcase_index_maps() {
        assert_eq!(QCase::LDep.index(0, 5), 5);
        assert_eq!(QCase::LDep.index(1, 5), 6);
        assert_eq!(QCase::ArithProg.index(0, 3), 3);
        assert_eq!(QCase::ArithProg.index(1, 3), 6);
    }

    #[test]
    fn hand_computed_small_sum() {
        // N = 4, T = 1: S_N(theta, 1) equals the brute-force re-evaluation.
        let f = poly(&[(&[1.0, 1.0], 1.0)]);
        let s = sampler(1.2, 0.0);
        let (_, norm) = make_normalization(&f, &s, 4, 9, 10_000).unwrap();
        let x_key = 777;
        let b = simulate_paths(&f, QCase::ArithProg, 4, 1.0, &s, &norm, x_key, true).unwrap();
        let mut expected = 0.0;
        for n in 1..=4u64 {
            expected += s.draw_with_key(x_key, n) * s.draw_with_key(x_key, 2 * n);
        }
        let raw = &b.raw_per_theta.as_ref().unwrap()[0];
        assert!((raw[4] - expected).abs() < 1e-12 * expected.abs().max(1.0));
        // Reads indices 3 and 6 at n = 3.
        let y3 = s.draw_with_key(x_key, 3) * s.draw_with_key(x_key, 6);
        assert!(((raw[3] - raw[2]) - y3).abs() < 1e-9 * y3.abs().max(1.0));
    }

    #[test]
    fn single_term_sum_equals_theta_path() {
        let f = poly(&[(&[1.0], 1.0)]);
        let s = sampler(1.5, 0.0);
        let (_, norm) = make_normalization(&f, &s, 100, 9, 10_000).unwrap();
        let b = simulate_paths(&f, QCase::LDep, 100, 1.0, &s, &norm, 5, false).unwrap();
        for (a, b2) in b.per_theta[0].values.iter().zip(&b.sum.values) {
            assert_eq!(a, b2);
        }
    }

    #[test]
    fn sum_path_is_weighted_sum_of_theta_paths() {
        let f = poly(&[(&[1.0, 1.0], 2.0), (&[2.0, 0.0], -0.5)]);
        let s = sampler(1.1, 0.0);
        let (_, norm) = make_normalization(&f, &s, 200, 9, 10_000).unwrap();
        let b = simulate_paths(&f, QCase::LDep, 200, 1.0, &s, &norm, 5, false).unwrap();
        for m in 0..b.sum.values.len() {
            let expect = 2.0 * b.per_theta[0].values[m] - 0.5 * b.per_theta[1].values[m];
            assert_eq!(b.sum.values[m], expect);
        }
    }

    #[test]
    fn block_identity_and_gap_structure() {
        // kBlock = 3, l = 2: B+(1) = {1,2,3}, B-(1) = {4}, B+(2) = {5,6,7}.
        assert!(in_block_segment(1, 3, 2));
        assert!(in_block_segment(3, 3, 2));
        assert!(!in_block_segment(4, 3, 2));
        assert!(in_block_segment(5, 3, 2));
        assert!(in_block_segment(7, 3, 2));
        assert!(!in_block_segment(8, 3, 2));

        let f = poly(&[(&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0)]);
        let s = sampler(1.5, 0.0);
        let (_, norm) = make_normalization(&f, &s, 500, 9, 10_000).unwrap();
        let full = simulate_paths(&f, QCase::LDep, 500, 1.0, &s, &norm, 5, false).unwrap();
        let (xi_k, eta_k) = block_decomposition(&f, 500, 1.0, &s, &norm, 5, 3).unwrap();
        for m in 0..full.sum.values.len() {
            let recomposed = xi_k.sum.values[m] + eta_k.sum.values[m];
            let err = (full.sum.values[m] - recomposed).abs();
            assert!(err <= 1e-9 * (1.0 + full.sum.values[m].abs()), "m={m} err={err}");
        }
    }

    #[test]
    fn ell_one_has_empty_gaps() {
        let f = poly(&[(&[1.0], 1.0)]);
        let s = sampler(1.5, 0.0);
        let (_, norm) = make_normalization(&f, &s, 100, 9, 10_000).unwrap();
        let (_, eta) = block_decomposition(&f, 100, 1.0, &s, &norm, 5, 4).unwrap();
        assert_eq!(eta.sum.sup_abs(), 0.0);
    }

    #[test]
    fn q_truncation_keeps_odd_indices_at_q1() {
        let f = poly(&[(&[1.0, 1.0], 1.0)]);
        let s = sampler(1.2, 0.0);
        let n = 64;
        let (_, norm) = make_normalization(&f, &s, n, 9, 10_000).unwrap();
        let tr = q_truncated_paths(&f, n, 1.0, &s, &norm, 5, 1).unwrap();
        // Retained summands are exactly the odd n: the truncated path is
        // flat across even steps.
        let v = &tr.per_theta[0].values;
        for m in (2..v.len()).step_by(2) {
            assert_eq!(v[m], v[m - 1], "m={m}");
        }
    }

    #[test]
    fn q_truncation_full_retention_matches_plain_paths() {
        let f = poly(&[(&[1.0, 1.0], 1.0)]);
        let s = sampler(1.2, 0.0);
        let n = 64;
        let (_, norm) = make_normalization(&f, &s, n, 9, 10_000).unwrap();
        let full = simulate_paths(&f, QCase::ArithProg, n, 1.0, &s, &norm, 5, false).unwrap();
        let tr = q_truncated_paths(&f, n, 1.0, &s, &norm, 5, 1_000).unwrap();
        let d = full.per_theta[0].sup_abs_diff(&tr.per_theta[0]);
        assert!(d <= 1e-10, "sup diff {d}");
    }

    #[test]
    fn rearrangement_of_sum_of_two_shifts_first_term() {
        // F = x1 + x2: the rearranged summand vector is (X_{n+1}, X_{n+1}).
        let f = poly(&[(&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0)]);
        let s = sampler(1.5, 0.0);
        let (summary, norm) = make_normalization(&f, &s, 50, 9, 10_000).unwrap();
        let plan = rearrangement_plan(&summary);
        assert_eq!(plan.offsets, vec![1, 0]);
        assert_eq!(plan.families, vec![vec![0, 1]]);
        let re = rearranged_paths(&f, 50, 1.0, &s, &summary, &norm, 5).unwrap();
        assert!(re.bound.holds, "max slack {}", re.bound.max_slack);
        // The rearranged summands coincide: the two component paths differ
        // only through their centerings (both 0 here by symmetry).
        let d = re.bundle.per_theta[0].sup_abs_diff(&re.bundle.per_theta[1]);
        assert!(d <= 1e-12, "components differ by {d}");
    }

    #[test]
    fn rearrangement_is_identity_when_shift_condition_holds() {
        let f = poly(&[(&[2.0, 1.0, 2.0], 1.0), (&[2.0, 2.0, 1.0], 1.0)]);
        let s = sampler(1.5, 0.0);
        let (summary, _) = make_normalization(&f, &s, 50, 9, 10_000).unwrap();
        let plan = rearrangement_plan(&summary);
        assert_eq!(plan.offsets, vec![0, 0]);
        assert!(plan.families.is_empty());
    }

    #[test]
    fn ensembles_are_deterministic_and_match_single_run() {
        let f = poly(&[(&[1.0], 1.0)]);
        let s = sampler(1.5, 0.0);
        let (_, norm) = make_normalization(&f, &s, 100, 9, 10_000).unwrap();
        let spec = EnsembleSpec {
            f: f.clone(),
            qcase: QCase::LDep,
            n: 100,
            horizon: 1.0,
            checkpoints: vec![0.5],
            jump_threshold: None,
        };
        let e1 = replicate_ensemble(&spec, &s, &norm, 31, 8).unwrap();
        let e2 = replicate_ensemble(&spec, &s, &norm, 31, 8).unwrap();
        for (a, b) in e1.iter().zip(&e2) {
            assert_eq!(a.end_sum, b.end_sum);
        }
        let single = replicate_ensemble(&spec, &s, &norm, 31, 1).unwrap();
        let direct =
            simulate_paths(&f, QCase::LDep, 100, 1.0, &s, &norm, single[0].x_key, false).unwrap();
        assert_eq!(single[0].end_sum, direct.sum.end_value());
    }
}
