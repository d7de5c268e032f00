//! Exact tail arithmetic for powers, products, monomials and polynomials of
//! independent heavy-tailed random variables.
//!
//! A tail class is `P{±X > x} ~ c± x^(-alpha) (ln x)^k`. This class is closed
//! under independent products and sums of products; the operations here push
//! the (alpha, k, c+, c-) quadruple through those compositions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexcalc;
use crate::numeric;
use crate::rng;

/// Relative tolerance used to decide whether two tail indices coincide.
/// Exact ties (iid inputs, equal ratios) compare equal in f64 anyway; the
/// tolerance only rescues ties that are mathematically exact but rounded
/// differently, e.g. 1.2/3 vs 0.4.
pub const INDEX_TIE_TOL: f64 = 1e-9;

#[inline]
pub fn index_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= INDEX_TIE_TOL * a.abs().max(b.abs())
}

/// The tail class (alpha, k, c+, c-) of a scalar random variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    pub alpha: f64,
    pub k: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

impl TailSpec {
    pub fn new(alpha: f64, k: f64, c_plus: f64, c_minus: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidTailSpec(format!(
                "alpha must lie in (0, 2), got {alpha}"
            )));
        }
        if k < 0.0 {
            return Err(Error::NegativeLogPower(k));
        }
        Self::check_constants(alpha, k, c_plus, c_minus)
    }

    /// Tail spec with a negative log-power, admitted only for the
    /// `loglog_product_diagnostic` machinery (the product then leaves the
    /// closed class and gains ln ln factors). General k < 0 is rejected by
    /// `new`.
    pub fn diagnostic_negative_k(alpha: f64, k: f64, c_plus: f64, c_minus: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidTailSpec(format!(
                "alpha must lie in (0, 2), got {alpha}"
            )));
        }
        if !(-1.0..0.0).contains(&k) {
            return Err(Error::InvalidTailSpec(format!(
                "diagnostic tail requires k in [-1, 0), got {k}"
            )));
        }
        Self::check_constants(alpha, k, c_plus, c_minus)
    }

    fn check_constants(alpha: f64, k: f64, c_plus: f64, c_minus: f64) -> Result<Self> {
        if c_plus < 0.0 || c_minus < 0.0 || c_plus + c_minus <= 0.0 {
            return Err(Error::InvalidTailSpec(format!(
                "need c+ >= 0, c- >= 0, c+ + c- > 0; got ({c_plus}, {c_minus})"
            )));
        }
        Ok(TailSpec { alpha, k, c_plus, c_minus })
    }

    pub fn symmetric(alpha: f64, k: f64, c: f64) -> Result<Self> {
        Self::new(alpha, k, c, c)
    }

    pub fn is_symmetric(&self) -> bool {
        self.c_plus == self.c_minus
    }

    /// c± x^(-alpha) (ln x)^k, the model survival beyond the matching
    /// threshold. Only meaningful for x > 1.
    pub fn survival(&self, x: f64, positive_side: bool) -> f64 {
        let c = if positive_side { self.c_plus } else { self.c_minus };
        c * x.powf(-self.alpha) * x.ln().powf(self.k)
    }
}

/// Diagnostic tail of the form coefficient * x^(-alpha) * ln ln x; the
/// product law of Example-type inputs that leave the closed class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogTail {
    pub alpha: f64,
    pub coefficient: f64,
}

/// A single monomial h * x_1^s1 ... x_l^sl.
///
/// Exponents are nonnegative; non-integer exponents are admitted only when
/// every variable they touch is flagged nonnegative (checked at use sites).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<f64>,
    pub coefficient: f64,
}

impl Monomial {
    pub fn new(exponents: Vec<f64>, coefficient: f64) -> Result<Self> {
        if coefficient == 0.0 || !coefficient.is_finite() {
            return Err(Error::InvalidPolynomial(
                "monomial coefficient must be nonzero and finite".into(),
            ));
        }
        if exponents.iter().any(|&s| s < 0.0 || !s.is_finite()) {
            return Err(Error::InvalidPolynomial("exponents must be nonnegative".into()));
        }
        if !exponents.iter().any(|&s| s > 0.0) {
            return Err(Error::InvalidPolynomial("at least one exponent must be positive".into()));
        }
        Ok(Monomial { exponents, coefficient })
    }

    pub fn arity(&self) -> usize {
        self.exponents.len()
    }

    /// Indices j with sigma_j > 0.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.exponents
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0.0)
            .map(|(j, _)| j)
    }

    pub fn is_integer_valued(&self) -> bool {
        self.exponents.iter().all(|s| s.fract() == 0.0)
    }

    /// Evaluates x_1^s1 ... x_l^sl (without the coefficient).
    pub fn eval(&self, xs: &[f64]) -> f64 {
        let mut v = 1.0;
        for (&x, &s) in xs.iter().zip(&self.exponents) {
            if s == 0.0 {
                continue;
            }
            v *= if s.fract() == 0.0 && s <= i32::MAX as f64 {
                x.powi(s as i32)
            } else {
                x.powf(s)
            };
        }
        v
    }
}

/// A polynomial over l independent variables: a finite set of monomials with
/// distinct exponent vectors and nonzero coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub arity: usize,
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(arity: usize, terms: Vec<Monomial>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::InvalidPolynomial("arity must be positive".into()));
        }
        if terms.is_empty() {
            return Err(Error::InvalidPolynomial("term set must be nonempty".into()));
        }
        for t in &terms {
            if t.arity() != arity {
                return Err(Error::InvalidPolynomial(format!(
                    "term arity {} does not match polynomial arity {arity}",
                    t.arity()
                )));
            }
        }
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                if terms[i].exponents == terms[j].exponents {
                    return Err(Error::InvalidPolynomial(
                        "exponent vectors must be distinct".into(),
                    ));
                }
            }
        }
        Ok(Polynomial { arity, terms })
    }

    pub fn eval(&self, xs: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.coefficient * t.eval(xs)).sum()
    }
}

/// Which part of the law a fractional moment refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentSign {
    Plus,
    Minus,
    Abs,
}

/// A concrete law with a prescribed tail: tail spec, fractional moments and
/// an index-addressable sampler. Implemented by `sampler::HeavyTailSampler`.
pub trait TailedLaw: Sync {
    fn tail(&self) -> TailSpec;

    /// E[(X+)^s], E[(X-)^s] or E[|X|^s]. Must fail for s >= alpha.
    fn signed_moment(&self, order: f64, sign: MomentSign) -> Result<f64>;

    /// Pure function of (key, index).
    fn draw(&self, key: u64, index: u64) -> f64;

    fn is_symmetric(&self) -> bool;

    /// True when the law has no mass on (-inf, 0).
    fn is_nonnegative(&self) -> bool;
}

/// E[(X+)^order], E[(X-)^order] or E[|X|^order] of a tailed law; defined for
/// 0 < order < alpha.
pub fn fractional_moment(d: &dyn TailedLaw, order: f64, sign: MomentSign) -> Result<f64> {
    if order <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "moment order must be positive, got {order}"
        )));
    }
    d.signed_moment(order, sign)
}

/// Tail of X^sigma for a positive integer power.
///
/// The index becomes alpha/sigma and k is unchanged; odd powers keep the two
/// sides apart (c±' = sigma^(-k) c±) while even powers fold all mass onto
/// the positive side (c+' = sigma^(-k)(c+ + c-), c-' = 0).
pub fn power_tail(spec: TailSpec, sigma: u32) -> TailSpec {
    assert!(sigma >= 1, "power must be a positive integer");
    let scale = (sigma as f64).powf(-spec.k);
    let alpha = spec.alpha / sigma as f64;
    if sigma % 2 == 1 {
        TailSpec {
            alpha,
            k: spec.k,
            c_plus: scale * spec.c_plus,
            c_minus: scale * spec.c_minus,
        }
    } else {
        TailSpec {
            alpha,
            k: spec.k,
            c_plus: scale * (spec.c_plus + spec.c_minus),
            c_minus: 0.0,
        }
    }
}

/// Tail of X^sigma for a real power of a nonnegative variable.
fn power_tail_nonnegative(spec: TailSpec, sigma: f64) -> TailSpec {
    TailSpec {
        alpha: spec.alpha / sigma,
        k: spec.k,
        c_plus: sigma.powf(-spec.k) * spec.c_plus,
        c_minus: 0.0,
    }
}

/// Fractional-moment expression attached to a tail during pairwise folds.
/// Moments of powers and independent products reduce to moments of the base
/// laws, so folds never need the distribution of an intermediate product.
#[derive(Clone)]
enum MomentExpr<'a> {
    Base(&'a dyn TailedLaw),
    Power { base: &'a dyn TailedLaw, sigma: f64, odd: Option<bool> },
    Product(Box<MomentExpr<'a>>, Box<MomentExpr<'a>>),
}

impl<'a> MomentExpr<'a> {
    fn signed(&self, order: f64, sign: MomentSign) -> Result<f64> {
        match self {
            MomentExpr::Base(law) => law.signed_moment(order, sign),
            MomentExpr::Power { base, sigma, odd } => {
                let s = order * sigma;
                match odd {
                    Some(true) => base.signed_moment(s, sign),
                    // Even power: the negative part vanishes, the positive
                    // part is |X|^sigma.
                    Some(false) => match sign {
                        MomentSign::Minus => Ok(0.0),
                        _ => base.signed_moment(s, MomentSign::Abs),
                    },
                    // Real power of a nonnegative variable.
                    None => match sign {
                        MomentSign::Minus => Ok(0.0),
                        _ => base.signed_moment(s, MomentSign::Abs),
                    },
                }
            }
            MomentExpr::Product(a, b) => {
                let (ap, am) = (a.signed(order, MomentSign::Plus)?, a.signed(order, MomentSign::Minus)?);
                let (bp, bm) = (b.signed(order, MomentSign::Plus)?, b.signed(order, MomentSign::Minus)?);
                Ok(match sign {
                    MomentSign::Plus => ap * bp + am * bm,
                    MomentSign::Minus => ap * bm + am * bp,
                    MomentSign::Abs => (ap + am) * (bp + bm),
                })
            }
        }
    }
}

/// A tail spec paired with the moment algebra of the underlying factor; the
/// unit the pairwise product fold operates on.
#[derive(Clone)]
pub struct FactorTail<'a> {
    pub tail: TailSpec,
    moments: MomentExpr<'a>,
}

impl<'a> FactorTail<'a> {
    pub fn base(law: &'a dyn TailedLaw) -> Self {
        FactorTail { tail: law.tail(), moments: MomentExpr::Base(law) }
    }

    /// X^sigma for integer sigma >= 1.
    pub fn power(law: &'a dyn TailedLaw, sigma: u32) -> Self {
        FactorTail {
            tail: power_tail(law.tail(), sigma),
            moments: MomentExpr::Power {
                base: law,
                sigma: sigma as f64,
                odd: Some(sigma % 2 == 1),
            },
        }
    }

    /// X^sigma for real sigma > 0; requires a nonnegative law.
    pub fn power_real(law: &'a dyn TailedLaw, sigma: f64) -> Result<Self> {
        if !law.is_nonnegative() {
            return Err(Error::InvalidArgument(
                "non-integer exponents require a nonnegative variable".into(),
            ));
        }
        Ok(FactorTail {
            tail: power_tail_nonnegative(law.tail(), sigma),
            moments: MomentExpr::Power { base: law, sigma, odd: None },
        })
    }

    pub fn signed_moment(&self, order: f64, sign: MomentSign) -> Result<f64> {
        self.moments.signed(order, sign)
    }
}

/// Tail of the product of two independent factors.
///
/// Equal indices: alpha stays, k = k_a + k_b + 1 and the constants pick up
/// alpha * B(k_a+1, k_b+1) times the sign-crossed products. Distinct
/// indices: the lighter tail only contributes through its fractional moments
/// of order alpha_heavy (Breiman).
pub fn product<'a>(a: &FactorTail<'a>, b: &FactorTail<'a>) -> Result<FactorTail<'a>> {
    let (ta, tb) = (a.tail, b.tail);
    if ta.k < 0.0 || tb.k < 0.0 {
        return Err(Error::NegativeLogPower(ta.k.min(tb.k)));
    }
    let tail = if index_eq(ta.alpha, tb.alpha) {
        let alpha = ta.alpha;
        let cross_plus = ta.c_plus * tb.c_plus + ta.c_minus * tb.c_minus;
        let cross_minus = ta.c_plus * tb.c_minus + ta.c_minus * tb.c_plus;
        let factor = alpha * numeric::beta(ta.k + 1.0, tb.k + 1.0);
        TailSpec {
            alpha,
            k: ta.k + tb.k + 1.0,
            c_plus: factor * cross_plus,
            c_minus: factor * cross_minus,
        }
    } else if ta.alpha < tb.alpha {
        let mp = b.signed_moment(ta.alpha, MomentSign::Plus)?;
        let mm = b.signed_moment(ta.alpha, MomentSign::Minus)?;
        TailSpec {
            alpha: ta.alpha,
            k: ta.k,
            c_plus: ta.c_plus * mp + ta.c_minus * mm,
            c_minus: ta.c_plus * mm + ta.c_minus * mp,
        }
    } else {
        return product(b, a);
    };
    Ok(FactorTail {
        tail,
        moments: MomentExpr::Product(Box::new(a.moments.clone()), Box::new(b.moments.clone())),
    })
}

/// Tail of X_a * X_b for two independent tailed laws.
pub fn product_tail(a: &dyn TailedLaw, b: &dyn TailedLaw) -> Result<TailSpec> {
    Ok(product(&FactorTail::base(a), &FactorTail::base(b))?.tail)
}

fn monomial_factors<'a>(
    dists: &[&'a dyn TailedLaw],
    m: &Monomial,
) -> Result<Vec<FactorTail<'a>>> {
    if dists.len() != m.arity() {
        return Err(Error::DimensionMismatch(format!(
            "monomial arity {} vs {} distributions",
            m.arity(),
            dists.len()
        )));
    }
    let mut factors = Vec::new();
    for (j, &s) in m.exponents.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        if s.fract() == 0.0 {
            factors.push(FactorTail::power(dists[j], s as u32));
        } else {
            factors.push(FactorTail::power_real(dists[j], s)?);
        }
    }
    Ok(factors)
}

/// Canonical fold order: ascending tail index, ties by descending k, then by
/// position. The limit law is order-independent; the canonical order makes
/// computed constants bit-reproducible.
fn canonical_order(factors: &mut Vec<FactorTail>) {
    factors.sort_by(|x, y| {
        x.tail
            .alpha
            .partial_cmp(&y.tail.alpha)
            .unwrap()
            .then(y.tail.k.partial_cmp(&x.tail.k).unwrap())
    });
}

/// Tail of the monomial  prod_j X_j^{sigma_j}: per-factor power tails folded
/// pairwise in canonical order. The resulting indices equal the closed-form
/// alpha(theta) = min alpha_j/sigma_j and k(theta) = p - 1 + sum_{J} k_j.
pub fn monomial_tail(dists: &[&dyn TailedLaw], m: &Monomial) -> Result<TailSpec> {
    let mut factors = monomial_factors(dists, m)?;
    canonical_order(&mut factors);
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = product(&acc, f)?;
    }
    Ok(acc.tail)
}

/// Per-group contribution inside `polynomial_tail`.
#[derive(Clone, Debug, Serialize)]
pub struct GroupBreakdown {
    /// The shared extremal index set J of the group (0-based variable ids).
    pub j_set: Vec<usize>,
    /// Positions (into F.terms) of the monomials in this group.
    pub thetas: Vec<usize>,
    /// Tail of the common factor V = prod_{j in J} X_j^{sigma_j}.
    pub v_tail: TailSpec,
    /// E[(W+)^alpha*] and E[(W-)^alpha*] for W = sum_theta h_theta f_theta.
    pub w_plus_moment: f64,
    pub w_minus_moment: f64,
    /// Standard error of the Monte Carlo moment estimates (0 when exact).
    pub w_moment_se: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

pub const POLY_TAIL_MC_DRAWS: u64 = 10_000_000;

/// Tail of the polynomial F(X_1, ..., X_l).
///
/// Only the extremal monomial set contributes. It is partitioned by identical
/// J-sets; within a group every monomial factors as V * f_theta over the same
/// V, the group constants come from the scalar pushforward of V's tail by
/// W = sum h_theta f_theta, and groups add because their joint tails vanish.
pub fn polynomial_tail(
    dists: &[&dyn TailedLaw],
    f: &Polynomial,
    seed: u64,
) -> Result<(TailSpec, Vec<GroupBreakdown>)> {
    polynomial_tail_with_draws(dists, f, seed, POLY_TAIL_MC_DRAWS)
}

pub fn polynomial_tail_with_draws(
    dists: &[&dyn TailedLaw],
    f: &Polynomial,
    seed: u64,
    mc_draws: u64,
) -> Result<(TailSpec, Vec<GroupBreakdown>)> {
    if f.arity != dists.len() {
        return Err(Error::DimensionMismatch(format!(
            "polynomial arity {} vs {} distributions",
            f.arity,
            dists.len()
        )));
    }
    for m in &f.terms {
        for (j, &s) in m.exponents.iter().enumerate() {
            if s > 0.0 && s.fract() != 0.0 && !dists[j].is_nonnegative() {
                return Err(Error::InvalidArgument(
                    "non-integer exponents require nonnegative variables".into(),
                ));
            }
        }
    }
    let tails: Vec<(f64, f64)> = dists.iter().map(|d| (d.tail().alpha, d.tail().k)).collect();
    let summary = indexcalc::general_index_summary(f, &tails)?;

    // Group the extremal monomials by identical J-set.
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for &ti in &summary.theta_star {
        let j_set = summary.per_theta[ti].j_set.clone();
        match groups.iter_mut().find(|(j, _)| *j == j_set) {
            Some((_, members)) => members.push(ti),
            None => groups.push((j_set, vec![ti])),
        }
    }

    let mut breakdown = Vec::new();
    let mut c_plus = 0.0;
    let mut c_minus = 0.0;
    for (gi, (j_set, members)) in groups.iter().enumerate() {
        // The exponents on J are forced by alpha_j / sigma_j = alpha*, so all
        // members share them; take them from the first member.
        let first = &f.terms[members[0]];
        for &m in members {
            for &j in j_set {
                debug_assert_eq!(f.terms[m].exponents[j], first.exponents[j]);
            }
        }
        let mut v_exps = vec![0.0; f.arity];
        for &j in j_set {
            v_exps[j] = first.exponents[j];
        }
        let v_mono = Monomial::new(v_exps, 1.0)?;
        let v_tail = monomial_tail(dists, &v_mono)?;

        // W = sum over the group of h_theta * f_theta(complementary X's).
        let complementary: Vec<usize> = (0..f.arity)
            .filter(|j| !j_set.contains(j) && members.iter().any(|&m| f.terms[m].exponents[*j] > 0.0))
            .collect();
        let (wp, wm, se) = if complementary.is_empty() {
            let h: f64 = members.iter().map(|&m| f.terms[m].coefficient).sum();
            let a = summary.alpha_star;
            (h.max(0.0).powf(a), (-h).max(0.0).powf(a), 0.0)
        } else {
            estimate_w_moments(
                dists,
                f,
                members,
                j_set,
                &complementary,
                summary.alpha_star,
                rng::derive_idx(rng::derive(seed, "polynomial_tail.w"), gi as u64),
                mc_draws,
            )
        };

        let gc_plus = v_tail.c_plus * wp + v_tail.c_minus * wm;
        let gc_minus = v_tail.c_plus * wm + v_tail.c_minus * wp;
        c_plus += gc_plus;
        c_minus += gc_minus;
        breakdown.push(GroupBreakdown {
            j_set: j_set.clone(),
            thetas: members.clone(),
            v_tail,
            w_plus_moment: wp,
            w_minus_moment: wm,
            w_moment_se: se,
            c_plus: gc_plus,
            c_minus: gc_minus,
        });
    }

    let spec = TailSpec {
        alpha: summary.alpha_star,
        k: summary.k_star,
        c_plus,
        c_minus,
    };
    Ok((spec, breakdown))
}

/// Monte Carlo estimate of E[(W±)^alpha*] for the group law
/// W = sum_theta h_theta f_theta(X).
#[allow(clippy::too_many_arguments)]
fn estimate_w_moments(
    dists: &[&dyn TailedLaw],
    f: &Polynomial,
    members: &[usize],
    j_set: &[usize],
    complementary: &[usize],
    alpha_star: f64,
    key: u64,
    draws: u64,
) -> (f64, f64, f64) {
    use rayon::prelude::*;

    let chunk: u64 = 65_536;
    let n_chunks = draws.div_ceil(chunk);
    let stats: Vec<(f64, f64, f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * chunk;
            let hi = (lo + chunk).min(draws);
            let mut sp = 0.0;
            let mut sm = 0.0;
            let mut sp2 = 0.0;
            let mut sm2 = 0.0;
            let mut xs = vec![0.0f64; f.arity];
            for i in lo..hi {
                for &l in complementary {
                    xs[l] = dists[l].draw(rng::derive_idx(key, l as u64), i);
                }
                let mut w = 0.0;
                for &m in members {
                    let term = &f.terms[m];
                    let mut v = term.coefficient;
                    for &l in complementary {
                        let s = term.exponents[l];
                        if s > 0.0 {
                            v *= if s.fract() == 0.0 { xs[l].powi(s as i32) } else { xs[l].powf(s) };
                        }
                    }
                    w += v;
                }
                let _ = j_set;
                let p = w.max(0.0).powf(alpha_star);
                let m = (-w).max(0.0).powf(alpha_star);
                sp += p;
                sm += m;
                sp2 += p * p;
                sm2 += m * m;
            }
            (sp, sm, sp2, sm2)
        })
        .collect();

    let n = draws as f64;
    let (mut sp, mut sm, mut sp2, mut sm2) = (0.0, 0.0, 0.0, 0.0);
    for (a, b, c, d) in stats {
        sp += a;
        sm += b;
        sp2 += c;
        sm2 += d;
    }
    let mp = sp / n;
    let mm = sm / n;
    let var_p = (sp2 / n - mp * mp).max(0.0);
    let var_m = (sm2 / n - mm * mm).max(0.0);
    let se = ((var_p + var_m) / n).sqrt();
    (mp, mm, se)
}

/// Coefficient of x^(-alpha) ln ln x for the product X_1 X_2 of symmetric
/// variables with per-side constants c1 (k = 0) and c2 (k = -1): a diagnostic
/// outside the closed class.
pub fn loglog_product_diagnostic(c1: f64, c2: f64, alpha: f64) -> Result<LogLogTail> {
    if c1 < 0.0 || c2 < 0.0 {
        return Err(Error::InvalidArgument("constants must be nonnegative".into()));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0,2), got {alpha}")));
    }
    Ok(LogLogTail { alpha, coefficient: 2.0 * c1 * c2 * alpha })
}

/// Sufficient condition for the joint tail of two monomials to vanish at the
/// extremal scale: both extremal with different J-sets, or at least one of
/// them non-extremal. Identical monomials trivially share all their mass.
pub fn joint_tail_vanishes(
    dists: &[&dyn TailedLaw],
    theta1: &Monomial,
    theta2: &Monomial,
) -> Result<bool> {
    if theta1.exponents == theta2.exponents {
        return Ok(false);
    }
    let f = Polynomial::new(
        theta1.arity(),
        vec![
            Monomial::new(theta1.exponents.clone(), 1.0)?,
            Monomial::new(theta2.exponents.clone(), 1.0)?,
        ],
    )?;
    let tails: Vec<(f64, f64)> = dists.iter().map(|d| (d.tail().alpha, d.tail().k)).collect();
    let summary = indexcalc::general_index_summary(&f, &tails)?;
    let both_star = summary.theta_star.contains(&0) && summary.theta_star.contains(&1);
    if !both_star {
        return Ok(true);
    }
    Ok(summary.per_theta[0].j_set != summary.per_theta[1].j_set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_tail_even_folds_mass() {
        let s = TailSpec::symmetric(1.5, 0.0, 1.0).unwrap();
        let p = power_tail(s, 2);
        assert_eq!(p.alpha, 0.75);
        assert_eq!(p.k, 0.0);
        assert_eq!(p.c_plus, 2.0);
        assert_eq!(p.c_minus, 0.0);
    }

    #[test]
    fn power_tail_identity() {
        let s = TailSpec::new(1.0, 2.0, 1.0, 0.0).unwrap();
        assert_eq!(power_tail(s, 1), s);
    }

    #[test]
    fn power_tail_odd_scales_by_sigma_to_minus_k() {
        let s = TailSpec::new(1.2, 1.0, 0.3, 0.7).unwrap();
        let p = power_tail(s, 3);
        assert!((p.alpha - 0.4).abs() < 1e-15);
        assert_eq!(p.k, 1.0);
        assert!((p.c_plus - 0.1).abs() < 1e-15);
        assert!((p.c_minus - 7.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn tail_spec_rejects_bad_parameters() {
        assert!(TailSpec::new(2.5, 0.0, 1.0, 1.0).is_err());
        assert!(TailSpec::new(1.0, -0.5, 1.0, 1.0).is_err());
        assert!(TailSpec::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(TailSpec::diagnostic_negative_k(1.0, -1.0, 1.0, 1.0).is_ok());
        assert!(TailSpec::diagnostic_negative_k(1.0, -2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn loglog_diagnostic_coefficient() {
        let t = loglog_product_diagnostic(0.5, 0.5, 1.0).unwrap();
        assert!((t.coefficient - 0.5).abs() < 1e-15);
        let z = loglog_product_diagnostic(0.0, 1.0, 1.0).unwrap();
        assert_eq!(z.coefficient, 0.0);
        let o = loglog_product_diagnostic(1.0, 1.0, 0.5).unwrap();
        assert!((o.coefficient - 1.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_rejects_duplicate_terms() {
        let m1 = Monomial::new(vec![1.0, 0.0], 1.0).unwrap();
        let m2 = Monomial::new(vec![1.0, 0.0], -2.0).unwrap();
        assert!(Polynomial::new(2, vec![m1, m2]).is_err());
    }

    #[test]
    fn monomial_rejects_degenerate() {
        assert!(Monomial::new(vec![0.0, 0.0], 1.0).is_err());
        assert!(Monomial::new(vec![1.0], 0.0).is_err());
    }
}
