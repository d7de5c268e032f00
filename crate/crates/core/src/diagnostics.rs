//! Estimators and tests that confront simulation output with the predicted
//! limits: tail fitting, the Hill estimator, Levy-Khintchine characteristic
//! exponents (numeric and closed form), cluster estimation of the limiting
//! Levy measure from block sums, increment-dependence tests and joint-jump
//! scans.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric;
use crate::sampler::stable_parameters;
use crate::simulator::JumpEvent;
use crate::stats;
use crate::tailspec::TailSpec;

/// Least-squares fit of ln S(z) = ln c - alpha ln z + k ln ln z over a
/// ladder of empirical survival points.
#[derive(Clone, Debug, Serialize)]
pub struct TailFit {
    pub alpha_hat: f64,
    pub k_hat: f64,
    pub c_hat: f64,
    pub alpha_se: f64,
    pub k_se: f64,
    pub thresholds: Vec<f64>,
    pub survival: Vec<f64>,
    pub fitted_survival: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailSide {
    Plus,
    Minus,
}

/// Solves the 3x3 normal equations and returns (coefficients, covariance
/// scale matrix (X'X)^{-1}).
fn solve_ls3(rows: &[[f64; 3]], ys: &[f64]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    for (r, &y) in rows.iter().zip(ys) {
        for i in 0..3 {
            for j in 0..3 {
                xtx[i][j] += r[i] * r[j];
            }
            xty[i] += r[i] * y;
        }
    }
    // Gaussian elimination with partial pivoting on [XtX | XtY | I].
    let mut aug = [[0.0f64; 7]; 3];
    for i in 0..3 {
        aug[i][..3].copy_from_slice(&xtx[i]);
        aug[i][3] = xty[i];
        aug[i][4 + i] = 1.0;
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
            .unwrap();
        aug.swap(col, piv);
        let d = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for row in 0..3 {
            if row != col {
                let f = aug[row][col];
                let pivot_row = aug[col];
                for (v, p) in aug[row].iter_mut().zip(pivot_row) {
                    *v -= f * p;
                }
            }
        }
    }
    let coef = [aug[0][3], aug[1][3], aug[2][3]];
    let mut inv = [[0.0f64; 3]; 3];
    for i in 0..3 {
        inv[i].copy_from_slice(&aug[i][4..7]);
    }
    (coef, inv)
}

fn tail_fit_at_levels(
    sorted_desc: &[f64],
    n_total: usize,
    p_shallow: f64,
    p_deep: f64,
) -> Result<TailFit> {
    let n = n_total as f64;
    // Anchor the ladder at the two quantiles and place 20 log-spaced
    // thresholds between them; counting exceedances at fixed thresholds
    // keeps the regressors (ln z, ln ln z) noise-free.
    let k_shallow = ((p_shallow * n) as usize).max(1).min(sorted_desc.len() - 1);
    let k_deep = ((p_deep * n) as usize).max(1).min(sorted_desc.len() - 1);
    let z_lo = sorted_desc[k_shallow].max(1.05);
    let z_hi = sorted_desc[k_deep];
    if z_hi <= z_lo {
        return Err(Error::TooFewExceedances { got: 0, need: 100, threshold: z_hi });
    }
    let n_points = 20;
    let mut rows: Vec<[f64; 3]> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut thresholds = Vec::new();
    let mut survival = Vec::new();
    let mut last_count = usize::MAX;
    for i in 0..n_points {
        let z = (z_lo.ln() + (z_hi.ln() - z_lo.ln()) * i as f64 / (n_points - 1) as f64).exp();
        let count = sorted_desc.partition_point(|&v| v > z);
        if count == 0 || count == last_count {
            continue;
        }
        last_count = count;
        let s = count as f64 / n;
        rows.push([1.0, z.ln(), z.ln().ln()]);
        ys.push(s.ln());
        thresholds.push(z);
        survival.push(s);
    }
    if rows.len() < 6 {
        return Err(Error::TooFewExceedances {
            got: rows.len(),
            need: 6,
            threshold: *thresholds.last().unwrap_or(&f64::NAN),
        });
    }
    let deepest = (survival.last().unwrap() * n) as usize;
    if deepest < 100 {
        return Err(Error::TooFewExceedances {
            got: deepest,
            need: 100,
            threshold: *thresholds.last().unwrap(),
        });
    }
    let (coef, inv) = solve_ls3(&rows, &ys);
    let m = rows.len() as f64;
    let mut rss = 0.0;
    let mut fitted = Vec::with_capacity(rows.len());
    for (r, &y) in rows.iter().zip(&ys) {
        let fy = coef[0] * r[0] + coef[1] * r[1] + coef[2] * r[2];
        rss += (y - fy) * (y - fy);
        fitted.push(fy.exp());
    }
    let sigma2 = rss / (m - 3.0).max(1.0);
    Ok(TailFit {
        alpha_hat: -coef[1],
        k_hat: coef[2],
        c_hat: coef[0].exp(),
        alpha_se: (sigma2 * inv[1][1]).sqrt(),
        k_se: (sigma2 * inv[2][2]).sqrt(),
        thresholds,
        survival,
        fitted_survival: fitted,
    })
}

/// Fits (alpha, k, c) to the empirical survival of one tail, over thresholds
/// at quantile levels 10^-2 .. 10^-4 (20 log-spaced points). If the deepest
/// threshold has fewer than 100 exceedances the ladder is widened once
/// toward shallower levels before giving up.
pub fn tail_fit(samples: &[f64], side: TailSide) -> Result<TailFit> {
    if samples.len() < 100_000 {
        return Err(Error::InvalidArgument(format!(
            "tail_fit needs at least 1e5 samples, got {}",
            samples.len()
        )));
    }
    let mut v: Vec<f64> = match side {
        TailSide::Plus => samples.to_vec(),
        TailSide::Minus => samples.iter().map(|&x| -x).collect(),
    };
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    match tail_fit_at_levels(&v, samples.len(), 1e-2, 1e-4) {
        Ok(fit) => Ok(fit),
        // Deepest threshold starved: retry with a shallower ladder.
        Err(_) => tail_fit_at_levels(&v, samples.len(), 10f64.powf(-1.5), 10f64.powf(-3.5)),
    }
}

/// Hill estimator of the tail index on the top m order statistics of |x|.
/// Degenerate spacings return +inf.
pub fn hill(samples: &[f64], m: usize) -> Result<f64> {
    if m == 0 || m >= samples.len() {
        return Err(Error::InvalidArgument(format!(
            "order-statistic count {m} must lie in [1, {})",
            samples.len()
        )));
    }
    let mut v: Vec<f64> = samples.iter().map(|x| x.abs()).filter(|x| *x > 0.0).collect();
    if v.len() <= m {
        return Err(Error::InvalidArgument("not enough positive magnitudes".into()));
    }
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let x_m = v[m];
    let sum_log: f64 = v[..m].iter().map(|&x| (x / x_m).ln()).sum();
    if sum_log <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(m as f64 / sum_log)
}

pub fn hill_default_m(n: usize) -> usize {
    (n as f64).powf(2.0 / 3.0).floor() as usize
}

/// Limiting-process description: stability index and Levy measure, with the
/// x/(1+x^2) truncation convention throughout (drift gamma in that
/// representation).
#[derive(Clone, Debug, Serialize)]
pub struct LevyLimit {
    pub alpha: f64,
    pub measure: LevyMeasure,
    pub gamma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub enum LevyMeasure {
    /// Density alpha c± |x|^(-1-alpha).
    PowerLaw { c_plus: f64, c_minus: f64 },
    /// Empirical atoms (jump size, mass) of the cluster measure beyond a
    /// threshold.
    ClusterEstimate { atoms: Vec<(f64, f64)> },
}

impl LevyLimit {
    pub fn from_tail_spec(ts: TailSpec) -> LevyLimit {
        LevyLimit {
            alpha: ts.alpha,
            measure: LevyMeasure::PowerLaw { c_plus: ts.c_plus, c_minus: ts.c_minus },
            gamma: 0.0,
        }
    }

    /// The characteristic exponent psi(xi) (including the drift), so that
    /// E e^{i xi Xi(t)} = exp(t psi(xi)).
    pub fn exponent(&self, xi: f64) -> Complex64 {
        let base = match &self.measure {
            LevyMeasure::PowerLaw { c_plus, c_minus } => {
                levy_exponent_power_law(self.alpha, *c_plus, *c_minus, xi)
            }
            LevyMeasure::ClusterEstimate { atoms } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(x, mass) in atoms {
                    let e = Complex64::new(0.0, xi * x).exp();
                    let comp = Complex64::new(0.0, xi * x / (1.0 + x * x));
                    acc += mass * (e - 1.0 - comp);
                }
                acc
            }
        };
        base + Complex64::new(0.0, self.gamma * xi)
    }
}

/// Numeric psi(xi) = ∫ (e^{i xi x} - 1 - i xi x/(1+x^2)) alpha c± |x|^(-1-alpha) dx,
/// assembled from a small-x series, adaptive quadrature on the middle and an
/// integration-by-parts asymptotic series for the oscillatory tail.
/// Absolute accuracy well below 1e-8 over the diagnostic grid.
pub fn levy_exponent_power_law(alpha: f64, c_plus: f64, c_minus: f64, xi: f64) -> Complex64 {
    if xi == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let i1 = one_sided_integral(alpha, xi.abs());
    let psi = alpha * (c_plus * i1 + c_minus * i1.conj());
    if xi > 0.0 {
        psi
    } else {
        psi.conj()
    }
}

/// I(xi) = ∫_0^∞ (e^{i xi x} - 1 - i xi x/(1+x^2)) x^(-1-alpha) dx, xi > 0.
fn one_sided_integral(alpha: f64, xi: f64) -> Complex64 {
    let delta = (0.5_f64).min(0.5 / xi);
    // Series on (0, delta].
    let mut re = 0.0;
    let mut term_fact = 1.0; // (2m)! accumulator
    for m in 1..60 {
        term_fact *= ((2 * m - 1) * (2 * m)) as f64;
        let t = (-1.0f64).powi(m) * xi.powi(2 * m) * delta.powf(2.0 * m as f64 - alpha)
            / (term_fact * (2.0 * m as f64 - alpha));
        re += t;
        if t.abs() < 1e-18 {
            break;
        }
    }
    let mut im = 0.0;
    let mut fact = 1.0; // (2m+1)! accumulator
    for m in 1..60 {
        fact *= ((2 * m) * (2 * m + 1)) as f64;
        let t = (-1.0f64).powi(m) * xi.powi(2 * m + 1) * delta.powf(2.0 * m as f64 + 1.0 - alpha)
            / (fact * (2.0 * m as f64 + 1.0 - alpha));
        im += t;
        if t.abs() < 1e-18 {
            break;
        }
    }
    // xi ∫_0^delta x^{2-alpha}/(1+x^2) dx as a series (delta <= 1/2).
    let mut comp_head = 0.0;
    for j in 0i32..60 {
        let e = 3.0 + 2.0 * f64::from(j) - alpha;
        let t = (-1.0f64).powi(j) * delta.powf(e) / e;
        comp_head += t;
        if t.abs() < 1e-18 {
            break;
        }
    }
    im += xi * comp_head;

    // Middle region [delta, a]: direct adaptive quadrature.
    let mut a = (2.0 * delta).max(40.0 / xi);
    let re_mid = numeric::integrate(
        |x| ((xi * x).cos() - 1.0) * x.powf(-1.0 - alpha),
        delta,
        a,
        1e-11,
        1e-12,
    );
    let im_mid = numeric::integrate(
        |x| ((xi * x).sin() - xi * x / (1.0 + x * x)) * x.powf(-1.0 - alpha),
        delta,
        a,
        1e-11,
        1e-12,
    );

    // Tail [a, ∞): J = ∫ e^{i xi x} x^{-s} dx by parts, the constant and the
    // compensator in closed series.
    let s = 1.0 + alpha;
    let osc = loop {
        match ibp_oscillatory(xi, s, a) {
            Some(v) => break v,
            None => a *= 2.0,
        }
    };
    let const_part = a.powf(-alpha) / alpha;
    let mut comp_tail = 0.0;
    for j in 0i32..60 {
        let e = alpha + 1.0 + 2.0 * f64::from(j);
        let t = (-1.0f64).powi(j) * a.powf(-e) / e;
        comp_tail += t;
        if t.abs() < 1e-18 {
            break;
        }
    }

    Complex64::new(re + re_mid, im + im_mid) + osc
        - Complex64::new(const_part, xi * comp_tail)
}

/// ∫_a^∞ e^{i xi x} x^{-s} dx via the integration-by-parts asymptotic
/// series; None when xi*a is too small for the series to converge.
fn ibp_oscillatory(xi: f64, s: f64, a: f64) -> Option<Complex64> {
    let i_xi = Complex64::new(0.0, xi);
    let head = Complex64::new(0.0, xi * a).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut coef = Complex64::new(1.0, 0.0);
    for m in 0..40 {
        let sm = s + m as f64;
        let term = -head * a.powf(-sm) / i_xi * coef;
        acc += term;
        coef = coef * sm / i_xi;
        let next_bound = coef.norm() * a.powf(-(sm + 1.0)) / xi;
        if next_bound < 1e-15 {
            // Remainder bound: |coef * J(s+m+1)| <= |coef| a^{-s-m}/ (s+m).
            let rem = coef.norm() * a.powf(-sm) / sm;
            if rem < 1e-13 {
                return Some(acc);
            }
        }
        if m > 4 && coef.norm() * a.powf(-sm) > 1e6 {
            return None; // diverging: enlarge a
        }
    }
    None
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Closed-form psi(xi) for the power-law measure, via the Gamma function;
/// an independent oracle for the numeric integration and the sampler
/// parameter mapping.
pub fn levy_exponent_closed_form(alpha: f64, c_plus: f64, c_minus: f64, xi: f64) -> Complex64 {
    if xi == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let (beta, scale, _) = stable_parameters(alpha, c_plus, c_minus);
    let ax = xi.abs();
    let sgn = xi.signum();
    if alpha == 1.0 {
        let mu = (c_plus - c_minus) * (1.0 - EULER_GAMMA);
        let re = -scale * ax;
        let im = -beta * scale * (2.0 / std::f64::consts::PI) * xi * ax.ln() + mu * xi;
        Complex64::new(re, im)
    } else {
        let sa = scale.powf(alpha) * ax.powf(alpha);
        let tan = (std::f64::consts::FRAC_PI_2 * alpha).tan();
        let mu = -alpha * (c_plus - c_minus) * std::f64::consts::FRAC_PI_2
            / (std::f64::consts::FRAC_PI_2 * alpha).cos();
        Complex64::new(-sa, sa * beta * tan * sgn + mu * xi)
    }
}

/// One filtered ensemble of scaled block sums for the cluster route: only
/// the sums beyond the threshold are materialized, with the total count of
/// complete blocks they were filtered from.
#[derive(Clone, Debug)]
pub struct ClusterInput {
    /// Scaled block sums (sum over a kept block of (Y_n - a_N))/b_N whose
    /// magnitude exceeds the threshold.
    pub exceeding_sums: Vec<f64>,
    pub total_blocks: u64,
    pub n: u64,
    pub k_block: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterTailEstimate {
    pub k_block: u64,
    pub threshold: f64,
    pub exceedances: u64,
    /// (N/k) P{block > delta} delta^alpha and the mirrored constant.
    pub c_plus: f64,
    pub c_minus: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    pub per_k: Vec<ClusterTailEstimate>,
    /// 1/k -> 0 linear extrapolation of c_plus + c_minus (reported; the
    /// largest block size is used for the measure itself).
    pub extrapolated_c_total: f64,
}

/// Builds the cluster-estimated limit: the empirical law of normalized block
/// sums beyond `threshold`, weighted so that atoms integrate to
/// (N/k) P{|block| > threshold}; the per-k tail constants and a 1/k
/// extrapolation are reported alongside.
pub fn build_levy_limit_from_clusters(
    inputs: &[ClusterInput],
    alpha_star: f64,
    threshold: f64,
) -> Result<(LevyLimit, ClusterReport)> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("need at least one block size".into()));
    }
    let mut per_k = Vec::new();
    for input in inputs {
        let total = input.total_blocks as f64;
        let mut above = 0u64;
        let mut below = 0u64;
        for &s in &input.exceeding_sums {
            if s > threshold {
                above += 1;
            } else if s < -threshold {
                below += 1;
            }
        }
        let exceedances = above + below;
        if exceedances < 50 {
            return Err(Error::TooFewExceedances {
                got: exceedances as usize,
                need: 50,
                threshold,
            });
        }
        let rate = input.n as f64 / input.k_block as f64 / total;
        per_k.push(ClusterTailEstimate {
            k_block: input.k_block,
            threshold,
            exceedances,
            c_plus: rate * above as f64 * threshold.powf(alpha_star),
            c_minus: rate * below as f64 * threshold.powf(alpha_star),
        });
    }
    // Atoms from the largest block size.
    let largest = inputs.iter().max_by_key(|i| i.k_block).unwrap();
    let total = largest.total_blocks as f64;
    let w = largest.n as f64 / largest.k_block as f64 / total;
    let atoms: Vec<(f64, f64)> = largest
        .exceeding_sums
        .iter()
        .filter(|s| s.abs() > threshold)
        .map(|&s| (s, w))
        .collect();
    // Linear fit of c_total against 1/k, evaluated at 1/k = 0.
    let extrapolated = if per_k.len() >= 2 {
        let xs: Vec<f64> = per_k.iter().map(|e| 1.0 / e.k_block as f64).collect();
        let ys: Vec<f64> = per_k.iter().map(|e| e.c_plus + e.c_minus).collect();
        let mx = numeric::mean(&xs);
        let my = numeric::mean(&ys);
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            num += (x - mx) * (y - my);
            den += (x - mx) * (x - mx);
        }
        if den > 0.0 {
            my - num / den * mx
        } else {
            my
        }
    } else {
        per_k[0].c_plus + per_k[0].c_minus
    };
    let limit = LevyLimit {
        alpha: alpha_star,
        measure: LevyMeasure::ClusterEstimate { atoms },
        gamma: 0.0,
    };
    Ok((limit, ClusterReport { per_k, extrapolated_c_total: extrapolated }))
}

/// Default frequency grid xi in {-5, ..., 5} with step 0.1.
pub fn default_cf_grid() -> Vec<f64> {
    (-50..=50).map(|i| i as f64 * 0.1).collect()
}

/// sup over the grid of |empirical CF of end values - exp(t psi)|.
pub fn cf_distance(end_values: &[f64], limit: &LevyLimit, t: f64, grid: &[f64]) -> f64 {
    let mut d: f64 = 0.0;
    for &xi in grid {
        let (re, im) = stats::empirical_cf(end_values, xi);
        let theory = (limit.exponent(xi) * t).exp();
        d = d.max((Complex64::new(re, im) - theory).norm());
    }
    d
}

/// The per-frequency comparison behind `cf_distance`, for export.
#[derive(Clone, Debug, Serialize)]
pub struct CfGridPoint {
    pub xi: f64,
    pub re_emp: f64,
    pub im_emp: f64,
    pub re_theory: f64,
    pub im_theory: f64,
}

pub fn cf_grid_comparison(end_values: &[f64], limit: &LevyLimit, t: f64, grid: &[f64]) -> Vec<CfGridPoint> {
    grid.iter()
        .map(|&xi| {
            let (re, im) = stats::empirical_cf(end_values, xi);
            let theory = (limit.exponent(xi) * t).exp();
            CfGridPoint { xi, re_emp: re, im_emp: im, re_theory: theory.re, im_theory: theory.im }
        })
        .collect()
}

/// Distance-correlation test between clipped window increments.
#[derive(Clone, Debug, Serialize)]
pub struct DependenceTest {
    pub statistic: f64,
    pub p_value: f64,
    pub clip_a: f64,
    pub clip_b: f64,
    pub permutations: u32,
}

/// Tests dependence between the increments of two windows across an
/// ensemble. Increments are clipped at their window's 99th percentile of
/// magnitudes (raw heavy-tailed increments make correlation statistics
/// meaningless; the dependence carried by shared large jumps survives the
/// clipping), then distance correlation with a permutation p-value.
pub fn increment_dependence(
    inc_a: &[f64],
    inc_b: &[f64],
    n_perms: u32,
    seed: u64,
) -> Result<DependenceTest> {
    if inc_a.len() != inc_b.len() {
        return Err(Error::DimensionMismatch("window ensembles differ in size".into()));
    }
    if inc_a.len() < 1000 {
        return Err(Error::InvalidArgument(format!(
            "need an ensemble of at least 1000, got {}",
            inc_a.len()
        )));
    }
    let abs_q = |v: &[f64]| {
        let mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        numeric::quantile(&mags, 0.99)
    };
    let cap_a = abs_q(inc_a);
    let cap_b = abs_q(inc_b);
    let a = stats::clip(inc_a, cap_a);
    let b = stats::clip(inc_b, cap_b);
    let (statistic, p_value) = stats::dcor_permutation_test(&a, &b, n_perms, seed);
    Ok(DependenceTest { statistic, p_value, clip_a: cap_a, clip_b: cap_b, permutations: n_perms })
}

/// Joint-jump counts between two component paths across an ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct JumpScan {
    pub delta: f64,
    pub replicates: u64,
    pub steps: u64,
    /// Jumps of each selected component above delta.
    pub single_counts: [u64; 2],
    /// Both components jump at the same grid step.
    pub simultaneous_count: u64,
    /// Components jump one grid step apart.
    pub adjacent_count: u64,
    /// Counts per replicate.
    pub single_rate: [f64; 2],
    pub simultaneous_rate: f64,
    pub adjacent_rate: f64,
    /// Counts normalized by N * replicates.
    pub simultaneous_per_index: f64,
    pub adjacent_per_index: f64,
}

/// Counts same-step and adjacent-step joint jumps of size >= delta (in Xi
/// units, i.e. summands of size delta b_N) for a pair of components, over
/// per-replicate jump-event lists.
pub fn joint_jump_scan(
    jumps_per_replicate: &[Vec<JumpEvent>],
    components: (usize, usize),
    delta: f64,
    n: u64,
) -> Result<JumpScan> {
    if delta <= 0.0 {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    let r = jumps_per_replicate.len() as u64;
    let mut single = [0u64; 2];
    let mut simultaneous = 0u64;
    let mut adjacent = 0u64;
    let mut steps = 0u64;
    for rep in jumps_per_replicate {
        let mut a_steps: Vec<u64> = Vec::new();
        let mut b_steps: Vec<u64> = Vec::new();
        for j in rep {
            if j.size.abs() < delta {
                continue;
            }
            if j.theta == components.0 {
                a_steps.push(j.step);
            }
            if j.theta == components.1 {
                b_steps.push(j.step);
            }
            steps = steps.max(j.step);
        }
        single[0] += a_steps.len() as u64;
        single[1] += b_steps.len() as u64;
        for &a in &a_steps {
            for &b in &b_steps {
                if a == b {
                    simultaneous += 1;
                } else if a.abs_diff(b) == 1 {
                    adjacent += 1;
                }
            }
        }
    }
    let rf = r as f64;
    Ok(JumpScan {
        delta,
        replicates: r,
        steps,
        single_counts: single,
        simultaneous_count: simultaneous,
        adjacent_count: adjacent,
        single_rate: [single[0] as f64 / rf, single[1] as f64 / rf],
        simultaneous_rate: simultaneous as f64 / rf,
        adjacent_rate: adjacent as f64 / rf,
        simultaneous_per_index: simultaneous as f64 / (rf * n as f64),
        adjacent_per_index: adjacent as f64 / (rf * n as f64),
    })
}

/// Median of S_N(theta, 1)/N across replicates vs the exact monomial mean;
/// the weak-law check for alpha* > 1.
#[derive(Clone, Debug, Serialize)]
pub struct LlnCheck {
    pub median: f64,
    pub expected: f64,
    pub iqr: f64,
    pub within_3_iqr: bool,
}

pub fn lln_check(scaled_sums: &[f64], expected: f64) -> LlnCheck {
    let median = numeric::median(scaled_sums);
    let iqr = numeric::quantile(scaled_sums, 0.75) - numeric::quantile(scaled_sums, 0.25);
    LlnCheck {
        median,
        expected,
        iqr,
        within_3_iqr: (median - expected).abs() <= 3.0 * iqr.max(f64::EPSILON),
    }
}

/// Exceedance counting against modeled survival values, with binomial
/// standard errors: the workhorse of the tail acceptance checks.
#[derive(Clone, Debug, Serialize)]
pub struct SurvivalComparison {
    pub threshold: f64,
    pub empirical: f64,
    pub predicted: f64,
    pub relative_error: f64,
    pub exceedances: u64,
    pub binomial_se: f64,
}

pub fn compare_survival(
    empirical: f64,
    predicted: f64,
    draws: u64,
    threshold: f64,
) -> SurvivalComparison {
    let exceedances = (empirical * draws as f64).round() as u64;
    SurvivalComparison {
        threshold,
        empirical,
        predicted,
        relative_error: (empirical - predicted).abs() / predicted,
        exceedances,
        binomial_se: (empirical * (1.0 - empirical) / draws as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn numeric_psi_matches_closed_form() {
        for &(alpha, cp, cm) in
            &[(1.5, 0.5, 0.5), (0.7, 1.0, 0.0), (1.3, 1.0, 0.2), (1.9, 0.3, 0.6), (0.5, 0.5, 0.5)]
        {
            for &xi in &[0.1, 0.5, 1.0, 2.5, 5.0, -1.0, -4.2] {
                let num = levy_exponent_power_law(alpha, cp, cm, xi);
                let cf = levy_exponent_closed_form(alpha, cp, cm, xi);
                assert!(
                    (num - cf).norm() < 1e-8,
                    "alpha={alpha} xi={xi}: {num} vs {cf}"
                );
            }
        }
    }

    #[test]
    fn numeric_psi_matches_closed_form_alpha_one() {
        for &(cp, cm) in &[(0.5, 0.5), (1.0, 0.25)] {
            for &xi in &[0.2, 1.0, 3.0, -2.0] {
                let num = levy_exponent_power_law(1.0, cp, cm, xi);
                let cf = levy_exponent_closed_form(1.0, cp, cm, xi);
                assert!((num - cf).norm() < 1e-8, "xi={xi}: {num} vs {cf}");
            }
        }
    }

    #[test]
    fn psi_axioms_on_grid() {
        let limit = LevyLimit::from_tail_spec(
            crate::tailspec::TailSpec::new(1.5, 0.0, 1.0, 1.0).unwrap(),
        );
        assert_eq!(limit.exponent(0.0), Complex64::new(0.0, 0.0));
        for &xi in &[0.3, 1.0, 4.0] {
            let p = limit.exponent(xi);
            let m = limit.exponent(-xi);
            assert!((p - m.conj()).norm() < 1e-10);
            assert!(p.re <= 0.0);
        }
    }

    #[test]
    fn tail_fit_recovers_exact_pareto() {
        // Exact Pareto alpha = 1: X = 1/u.
        let n = 10_000_000;
        let samples: Vec<f64> = (0..n).map(|i| 1.0 / rng::uniform(3, i)).collect();
        let fit = tail_fit(&samples, TailSide::Plus).unwrap();
        assert!((fit.alpha_hat - 1.0).abs() < 0.05, "alpha {}", fit.alpha_hat);
        assert!(fit.k_hat.abs() < 0.5, "k {}", fit.k_hat);
    }

    #[test]
    fn tail_fit_scale_equivariance() {
        let n = 2_000_000;
        let samples: Vec<f64> = (0..n).map(|i| rng::uniform(3, i).powf(-1.0 / 1.4)).collect();
        let scaled: Vec<f64> = samples.iter().map(|x| 7.0 * x).collect();
        let f1 = tail_fit(&samples, TailSide::Plus).unwrap();
        let f2 = tail_fit(&scaled, TailSide::Plus).unwrap();
        assert!((f1.alpha_hat - f2.alpha_hat).abs() < 3.0 * (f1.alpha_se + f2.alpha_se));
        assert!((f1.k_hat - f2.k_hat).abs() < 3.0 * (f1.k_se + f2.k_se));
        // c itself trades off against k in the fit; the equivariant object
        // is the fitted survival: model2 at 7z must match model1 at z.
        let z = f1.thresholds[f1.thresholds.len() / 2];
        let model = |f: &TailFit, z: f64| {
            f.c_hat * z.powf(-f.alpha_hat) * z.ln().powf(f.k_hat)
        };
        let ratio = model(&f2, 7.0 * z) / model(&f1, z);
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn hill_on_exact_pareto() {
        let n = 1_000_000usize;
        let samples: Vec<f64> = (0..n as u64).map(|i| 1.0 / rng::uniform(5, i)).collect();
        let est = hill(&samples, hill_default_m(n)).unwrap();
        assert!((est - 1.0).abs() < 0.03, "hill {est}");
    }

    #[test]
    fn hill_degenerate_returns_infinity() {
        let samples = vec![2.0; 100];
        assert_eq!(hill(&samples, 10).unwrap(), f64::INFINITY);
    }

    #[test]
    fn cf_distance_monotone_in_misfit() {
        let s = crate::sampler::StableSampler::new(1.5, 0.5, 0.5, 77).unwrap();
        let data = s.sample(20_000);
        let grid = default_cf_grid();
        let good = LevyLimit::from_tail_spec(
            crate::tailspec::TailSpec::new(1.5, 0.0, 0.5, 0.5).unwrap(),
        );
        let bad = LevyLimit::from_tail_spec(
            crate::tailspec::TailSpec::new(1.5, 0.0, 1.0, 1.0).unwrap(),
        );
        let d_good = cf_distance(&data, &good, 1.0, &grid);
        let d_bad = cf_distance(&data, &bad, 1.0, &grid);
        assert!(d_good < d_bad, "good {d_good} bad {d_bad}");
        assert!(d_good < 3.0 * 2.0 / (20_000f64).sqrt(), "d_good {d_good}");
    }

    #[test]
    fn lln_check_centers() {
        let v = vec![0.9, 1.0, 1.1, 1.05, 0.95];
        let c = lln_check(&v, 1.0);
        assert!(c.within_3_iqr);
    }
}
