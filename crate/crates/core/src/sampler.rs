//! Random variables with exactly prescribed tails, addressable by index.
//!
//! The law matches c± x^(-alpha) (ln x)^k exactly beyond a threshold x0 on
//! each side and places the residual mass uniformly on (-x0, x0), split
//! proportionally to (c+ : c-). Draws invert the closed-form CDF at a
//! counter-based uniform, so X_i is a pure function of (seed, i).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexcalc::IndexSummary;
use crate::numeric::{self, KahanSum};
use crate::rng;
use crate::tailspec::{Monomial, MomentSign, Polynomial, TailSpec, TailedLaw};

/// Identity string of the counter scheme, recorded in reports.
pub const RNG_SCHEME: &str = "splitmix64-counter-v1";

/// Placement of the sub-threshold mass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum BodyConfig {
    /// Uniform on (-x0, x0), split proportionally to (c+ : c-) across the
    /// positive and negative halves so sign asymmetry is preserved.
    #[default]
    Uniform,
    /// Uniform on (-w x0, w x0) with 0 < w <= 1, same proportional split;
    /// the survival is flat on [w x0, x0). A narrower body shrinks the
    /// finite-z constants of product laws without touching the tails.
    ScaledUniform { width: f64 },
}

impl BodyConfig {
    fn width(self) -> f64 {
        match self {
            BodyConfig::Uniform => 1.0,
            BodyConfig::ScaledUniform { width } => width,
        }
    }
}

/// Solves c x^(-alpha) (ln x)^k = p for x = e^y on y >= y0, via Newton on
/// g(y) = alpha y - k ln y with a bisection-safeguarded bracket.
fn invert_survival(c: f64, alpha: f64, k: f64, p: f64, y0: f64) -> f64 {
    debug_assert!(p > 0.0 && c > 0.0);
    let target = (c / p).ln();
    if k == 0.0 {
        return (target / alpha).max(y0).exp();
    }
    let g = |y: f64| alpha * y - k * y.ln();
    let gp = |y: f64| alpha - k / y;
    // The solution is >= y0 whenever p <= survival(x0); bracket upward.
    let mut lo = y0;
    let mut hi = ((target + k * (target / alpha).abs().max(2.0).ln()) / alpha).max(y0 * 1.5) + 1.0;
    while g(hi) < target {
        hi *= 2.0;
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..200 {
        let val = g(y) - target;
        if val.abs() <= 1e-13 * target.abs().max(1.0) {
            break;
        }
        if val > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let step = val / gp(y);
        let mut next = y - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-15 * y.abs() {
            y = next;
            break;
        }
        y = next;
    }
    y.exp()
}

/// A concrete heavy-tailed law with exact tails beyond x0.
#[derive(Clone, Debug)]
pub struct HeavyTailSampler {
    tail: TailSpec,
    body: BodyConfig,
    x0: f64,
    /// Upper edge of the body support, width * x0.
    body_edge: f64,
    ln_x0: f64,
    /// Survival at x0 on each side.
    tail_plus: f64,
    tail_minus: f64,
    /// Body mass on each side of 0.
    body_plus: f64,
    body_minus: f64,
    key: u64,
}

/// Builds a sampler realizing `tail` exactly beyond a threshold
/// x0 = max(e^((k+1)/alpha), mass-feasibility point), where the feasibility
/// point solves (c+ + c-) x^(-alpha) (ln x)^k = 1/2. The resulting CDF is
/// continuous and integrates to 1.
pub fn build_sampler(tail: TailSpec, body: BodyConfig, seed: u64) -> Result<HeavyTailSampler> {
    let TailSpec { alpha, k, c_plus, c_minus } = tail;
    let width = body.width();
    if !(width > 0.0 && width <= 1.0) {
        return Err(Error::InfeasibleBody(format!(
            "body width fraction must lie in (0, 1], got {width}"
        )));
    }
    let c_tot = c_plus + c_minus;
    let y_mono = (k + 1.0) / alpha;
    let mut y0 = y_mono;
    if k < 0.0 {
        // Negative-k diagnostics: ln x0 must be positive before the mass
        // constraint can even be evaluated.
        y0 = y0.max(0.0625);
    }
    let survival_total = |y: f64| c_tot * (-alpha * y).exp() * y.powf(k);
    if survival_total(y0) > 0.5 {
        y0 = invert_survival(c_tot, alpha, k, 0.5, y0).ln();
    }
    let x0 = y0.exp();
    let tail_plus = c_plus * (-alpha * y0).exp() * y0.powf(k);
    let tail_minus = c_minus * (-alpha * y0).exp() * y0.powf(k);
    let body_mass = 1.0 - tail_plus - tail_minus;
    assert!(
        body_mass >= 0.0,
        "auto-enlarged threshold left negative residual mass"
    );
    let body_plus = body_mass * c_plus / c_tot;
    let body_minus = body_mass * c_minus / c_tot;
    Ok(HeavyTailSampler {
        tail,
        body,
        x0,
        body_edge: width * x0,
        ln_x0: y0,
        tail_plus,
        tail_minus,
        body_plus,
        body_minus,
        key: seed,
    })
}

impl HeavyTailSampler {
    pub fn tail_spec(&self) -> TailSpec {
        self.tail
    }

    pub fn threshold(&self) -> f64 {
        self.x0
    }

    pub fn body(&self) -> BodyConfig {
        self.body
    }

    pub fn seed(&self) -> u64 {
        self.key
    }

    /// Tail mass beyond the threshold (both sides).
    pub fn tail_mass(&self) -> f64 {
        self.tail_plus + self.tail_minus
    }

    /// Inverse-CDF transform of the counter uniform at (key, index).
    #[inline]
    pub fn draw_with_key(&self, key: u64, index: u64) -> f64 {
        self.transform(rng::uniform(key, index))
    }

    /// Draw X_index on the sampler's own stream.
    #[inline]
    pub fn draw_at(&self, index: u64) -> f64 {
        self.draw_with_key(self.key, index)
    }

    /// Maps a uniform u in (0,1) through the inverse CDF.
    #[inline]
    pub fn transform(&self, u: f64) -> f64 {
        let t = self.tail;
        if u <= self.tail_minus {
            -invert_survival(t.c_minus, t.alpha, t.k, u, self.ln_x0)
        } else if 1.0 - u <= self.tail_plus {
            invert_survival(t.c_plus, t.alpha, t.k, 1.0 - u, self.ln_x0)
        } else {
            let v = u - self.tail_minus;
            if v < self.body_minus {
                -self.body_edge * (1.0 - v / self.body_minus)
            } else if self.body_plus > 0.0 {
                self.body_edge * (v - self.body_minus) / self.body_plus
            } else {
                0.0
            }
        }
    }

    /// Closed-form CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        let t = self.tail;
        if x <= -self.x0 {
            let y = (-x).ln();
            t.c_minus * (-t.alpha * y).exp() * y.powf(t.k)
        } else if x < 0.0 {
            self.tail_minus + self.body_minus * ((x + self.body_edge) / self.body_edge).clamp(0.0, 1.0)
        } else if x < self.x0 {
            self.tail_minus
                + self.body_minus
                + self.body_plus * (x / self.body_edge).min(1.0)
        } else {
            let y = x.ln();
            1.0 - t.c_plus * (-t.alpha * y).exp() * y.powf(t.k)
        }
    }

    /// P{X > x} for x >= 0.
    pub fn survival_plus(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Closed-form density (the derivative of the CDF; the tail part is
    /// c x^(-alpha-1) (ln x)^(k-1) (alpha ln x - k)).
    pub fn density(&self, x: f64) -> f64 {
        let t = self.tail;
        let ax = x.abs();
        if ax >= self.x0 {
            let c = if x > 0.0 { t.c_plus } else { t.c_minus };
            let y = ax.ln();
            c * ax.powf(-t.alpha - 1.0) * y.powf(t.k - 1.0) * (t.alpha * y - t.k)
        } else if ax >= self.body_edge {
            0.0
        } else if x >= 0.0 {
            self.body_plus / self.body_edge
        } else {
            self.body_minus / self.body_edge
        }
    }

    /// Quadrature E[b^2 X / (b^2 + X^2)]; exact zero in the symmetric case.
    pub fn truncated_mean(&self, b: f64) -> f64 {
        assert!(b > 0.0);
        if self.is_symmetric() {
            return 0.0;
        }
        let t = self.tail;
        let e = self.body_edge;
        let body = (self.body_plus - self.body_minus) / e * 0.5 * b * b * (e * e / (b * b)).ln_1p();
        let tail_side = |c: f64| {
            if c == 0.0 {
                return 0.0;
            }
            let y0 = self.ln_x0;
            let upper = (y0.max(b.ln()) + (60.0 + 2.0 * t.k.abs()) / (1.0 + t.alpha)).max(y0 + 5.0);
            numeric::integrate(
                |y| {
                    let x = y.exp();
                    b * b * x / (b * b + x * x)
                        * c
                        * (-t.alpha * y).exp()
                        * y.powf(t.k - 1.0)
                        * (t.alpha * y - t.k)
                },
                y0,
                upper,
                1e-11,
                1e-300,
            )
        };
        body + tail_side(t.c_plus) - tail_side(t.c_minus)
    }
}

impl TailedLaw for HeavyTailSampler {
    fn tail(&self) -> TailSpec {
        self.tail
    }

    fn signed_moment(&self, order: f64, sign: MomentSign) -> Result<f64> {
        let t = self.tail;
        if order <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "moment order must be positive, got {order}"
            )));
        }
        if order >= t.alpha {
            return Err(Error::UndefinedMoment { order, alpha: t.alpha });
        }
        let side = |c: f64, tail_mass: f64, body_mass: f64| {
            // s int_0^x0 x^(s-1) S(x) dx with S flat at tail_mass on
            // [body_edge, x0) and linear below.
            let head = tail_mass * self.x0.powf(order)
                + body_mass * self.body_edge.powf(order) / (order + 1.0);
            let tail = if c > 0.0 {
                order * c * numeric::exp_poly_tail(t.alpha - order, t.k, self.ln_x0)
            } else {
                0.0
            };
            head + tail
        };
        Ok(match sign {
            MomentSign::Plus => side(t.c_plus, self.tail_plus, self.body_plus),
            MomentSign::Minus => side(t.c_minus, self.tail_minus, self.body_minus),
            MomentSign::Abs => {
                side(t.c_plus, self.tail_plus, self.body_plus)
                    + side(t.c_minus, self.tail_minus, self.body_minus)
            }
        })
    }

    #[inline]
    fn draw(&self, key: u64, index: u64) -> f64 {
        self.draw_with_key(key, index)
    }

    fn is_symmetric(&self) -> bool {
        self.tail.c_plus == self.tail.c_minus
    }

    fn is_nonnegative(&self) -> bool {
        self.tail.c_minus == 0.0
    }
}

/// Monte Carlo E[b^2 Z/(b^2+Z^2)] for Z = g_theta(X_1, ..., X_l) built from
/// independent copies; returns (estimate, standard error).
pub fn truncated_mean_mc(
    dists: &[&dyn TailedLaw],
    m: &Monomial,
    b: f64,
    seed: u64,
    draws: u64,
) -> (f64, f64) {
    use rayon::prelude::*;
    let active: Vec<usize> = m.support().collect();
    let chunk: u64 = 65_536;
    let n_chunks = draws.div_ceil(chunk);
    let partials: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * chunk;
            let hi = (lo + chunk).min(draws);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for i in lo..hi {
                let mut z = 1.0;
                for &j in &active {
                    let x = dists[j].draw(rng::derive_idx(seed, j as u64), i);
                    let e = m.exponents[j];
                    z *= if e.fract() == 0.0 { x.powi(e as i32) } else { x.powf(e) };
                }
                let v = b * b * z / (b * b + z * z);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (mut s, mut s2) = (0.0, 0.0);
    for (a, b2) in partials {
        s += a;
        s2 += b2;
    }
    let n = draws as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// The scaling b_N and per-monomial centerings a_N^theta.
#[derive(Clone, Debug, Serialize)]
pub struct NormalizationPair {
    pub n: u64,
    pub b_n: f64,
    /// a_N^theta per term of the polynomial, with Monte Carlo standard
    /// errors (0 where the value is exact or from quadrature).
    pub a_n: Vec<f64>,
    pub a_n_se: Vec<f64>,
}

/// b_N = N^(1/alpha*) ((1/alpha*) ln N)^(k*/alpha*).
pub fn scaling_b_n(alpha_star: f64, k_star: f64, n: u64) -> f64 {
    let nf = n as f64;
    nf.powf(1.0 / alpha_star) * ((nf.ln() / alpha_star).powf(k_star / alpha_star))
}

pub const TRUNCATED_MEAN_MC_DRAWS: u64 = 10_000_000;

/// Computes b_N and a_N^theta = E[b_N^2 Z_theta / (b_N^2 + Z_theta^2)].
///
/// Symmetric monomials center at exactly 0; single-variable first-power
/// monomials use quadrature against the closed-form density; everything else
/// uses Monte Carlo with `mc_draws` draws and a recorded standard error.
pub fn normalization(
    summary: &IndexSummary,
    n: u64,
    dists: &[&dyn TailedLaw],
    f: &Polynomial,
    samplers: &[&HeavyTailSampler],
    seed: u64,
    mc_draws: u64,
) -> Result<NormalizationPair> {
    if n < 2 {
        return Err(Error::InvalidArgument("N must be at least 2".into()));
    }
    let b_n = scaling_b_n(summary.alpha_star, summary.k_star, n);
    let mut a_n = Vec::with_capacity(f.terms.len());
    let mut a_n_se = Vec::with_capacity(f.terms.len());
    for (ti, m) in f.terms.iter().enumerate() {
        let active: Vec<usize> = m.support().collect();
        let symmetric = active.iter().any(|&j| {
            let e = m.exponents[j];
            e.fract() == 0.0 && (e as u64) % 2 == 1 && dists[j].is_symmetric()
        });
        if symmetric {
            a_n.push(0.0);
            a_n_se.push(0.0);
        } else if active.len() == 1 && m.exponents[active[0]] == 1.0 {
            a_n.push(samplers[active[0]].truncated_mean(b_n));
            a_n_se.push(0.0);
        } else {
            let key = rng::derive_idx(rng::derive(seed, "normalization.a_n"), ti as u64);
            let (est, se) = truncated_mean_mc(dists, m, b_n, key, mc_draws);
            a_n.push(est);
            a_n_se.push(se);
        }
    }
    Ok(NormalizationPair { n, b_n, a_n, a_n_se })
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Reference sampler for the alpha-stable law with Levy measure density
/// alpha c± |x|^(-1-alpha) and the x/(1+x^2) centering (zero drift in that
/// representation), generated by the Chambers-Mallows-Stuck method.
#[derive(Clone, Debug)]
pub struct StableSampler {
    pub alpha: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    key: u64,
    beta: f64,
    scale: f64,
    shift: f64,
}

/// Parameter mapping from the Levy measure alpha c± |x|^(-1-alpha) dx with
/// x/(1+x^2) compensation to the (alpha, beta, scale, shift) used by the
/// generator:
///   beta  = (c+ - c-)/(c+ + c-)
///   scale^alpha = (c+ + c-) Gamma(2-alpha) cos(pi alpha/2) / (1-alpha)
///   shift = -alpha (c+ - c-) (pi/2) / cos(pi alpha/2)        (alpha != 1)
/// and for alpha = 1: scale = (c+ + c-) pi/2 and
///   shift = (c+ - c-)(1 - EulerGamma) + (2/pi) beta scale ln(scale).
pub fn stable_parameters(alpha: f64, c_plus: f64, c_minus: f64) -> (f64, f64, f64) {
    let c_tot = c_plus + c_minus;
    let beta = (c_plus - c_minus) / c_tot;
    if alpha == 1.0 {
        let scale = c_tot * std::f64::consts::FRAC_PI_2;
        let shift = (c_plus - c_minus) * (1.0 - EULER_GAMMA)
            + (2.0 / std::f64::consts::PI) * beta * scale * scale.ln();
        (beta, scale, shift)
    } else {
        let half_pi_a = std::f64::consts::FRAC_PI_2 * alpha;
        let scale = (c_tot * numeric::gamma_fn(2.0 - alpha) * half_pi_a.cos() / (1.0 - alpha))
            .powf(1.0 / alpha);
        let shift = -alpha * (c_plus - c_minus) * std::f64::consts::FRAC_PI_2 / half_pi_a.cos();
        (beta, scale, shift)
    }
}

impl StableSampler {
    pub fn new(alpha: f64, c_plus: f64, c_minus: f64, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0,2), got {alpha}")));
        }
        if c_plus < 0.0 || c_minus < 0.0 || c_plus + c_minus <= 0.0 {
            return Err(Error::InvalidArgument("need c± >= 0 with c+ + c- > 0".into()));
        }
        let (beta, scale, shift) = stable_parameters(alpha, c_plus, c_minus);
        Ok(StableSampler { alpha, c_plus, c_minus, key: seed, beta, scale, shift })
    }

    /// Draw i uses the two counter uniforms at (2i, 2i + 1).
    pub fn draw_at(&self, index: u64) -> f64 {
        let u1 = rng::uniform(self.key, 2 * index);
        let u2 = rng::uniform(self.key, 2 * index + 1);
        let v = std::f64::consts::PI * (u1 - 0.5);
        let w = -u2.ln();
        let a = self.alpha;
        let b = self.beta;
        if a == 1.0 {
            let half_pi = std::f64::consts::FRAC_PI_2;
            let x = (1.0 / half_pi)
                * ((half_pi + b * v) * v.tan()
                    - b * ((half_pi * w * v.cos()) / (half_pi + b * v)).ln());
            self.scale * x + self.shift
        } else {
            let tan_hpa = (std::f64::consts::FRAC_PI_2 * a).tan();
            let b_ab = (b * tan_hpa).atan() / a;
            let s_ab = (1.0 + b * b * tan_hpa * tan_hpa).powf(0.5 / a);
            let x = s_ab * (a * (v + b_ab)).sin() / v.cos().powf(1.0 / a)
                * ((v - a * (v + b_ab)).cos() / w).powf((1.0 - a) / a);
            self.scale * x + self.shift
        }
    }

    pub fn sample(&self, count: usize) -> Vec<f64> {
        (0..count as u64).map(|i| self.draw_at(i)).collect()
    }
}

/// Partial-sum mean used by law-of-large-numbers checks: E[Z_theta], exact
/// product of per-factor moments (requires sigma_j < alpha_j for all j).
pub fn monomial_mean(dists: &[&dyn TailedLaw], m: &Monomial) -> Result<f64> {
    let mut mean = 1.0;
    for (j, &s) in m.exponents.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        let (p, q) = (
            dists[j].signed_moment(s, MomentSign::Plus)?,
            dists[j].signed_moment(s, MomentSign::Minus)?,
        );
        let odd = s.fract() == 0.0 && (s as u64) % 2 == 1;
        mean *= if odd { p - q } else { p + q };
    }
    Ok(mean)
}

/// Streaming empirical survival of f(draws) at given thresholds; used by
/// tail checks that cannot hold 10^8 draws in memory.
pub fn empirical_survival<F: Fn(u64) -> f64 + Sync>(
    value_at: F,
    draws: u64,
    thresholds: &[f64],
) -> Vec<f64> {
    use rayon::prelude::*;
    let chunk: u64 = 1 << 16;
    let n_chunks = draws.div_ceil(chunk);
    let counts: Vec<Vec<u64>> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * chunk;
            let hi = (lo + chunk).min(draws);
            let mut c = vec![0u64; thresholds.len()];
            for i in lo..hi {
                let v = value_at(i);
                for (t, &z) in thresholds.iter().enumerate() {
                    if v > z {
                        c[t] += 1;
                    }
                }
            }
            c
        })
        .collect();
    let mut total = vec![0u64; thresholds.len()];
    for c in counts {
        for (t, v) in c.into_iter().enumerate() {
            total[t] += v;
        }
    }
    total.into_iter().map(|c| c as f64 / draws as f64).collect()
}

/// Mean of f(draws) with compensated accumulation, parallel over chunks but
/// with a fixed combination order.
pub fn streamed_mean<F: Fn(u64) -> f64 + Sync>(value_at: F, draws: u64) -> f64 {
    use rayon::prelude::*;
    let chunk: u64 = 1 << 16;
    let n_chunks = draws.div_ceil(chunk);
    let sums: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * chunk;
            let hi = (lo + chunk).min(draws);
            let mut acc = KahanSum::new();
            for i in lo..hi {
                acc.add(value_at(i));
            }
            acc.value()
        })
        .collect();
    let mut acc = KahanSum::new();
    for s in sums {
        acc.add(s);
    }
    acc.value() / draws as f64
}
