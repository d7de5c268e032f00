//! Multi-index bookkeeping for polynomials of heavy-tailed variables and the
//! arithmetic machinery behind the arithmetic-progression case: smooth-number
//! decomposition, the conflict coloring and equivalence classes of dilated
//! index sets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tailspec::{index_eq, Polynomial};

/// Per-monomial derived indices.
#[derive(Clone, Debug, Serialize)]
pub struct ThetaIndices {
    /// alpha(theta) = min over supported j of alpha_j / sigma_j.
    pub alpha_theta: f64,
    /// 0-based positions where the minimum is attained. The 1-based variable
    /// positions (as used by q_j(n) = j n) are j + 1.
    pub j_set: Vec<usize>,
    pub p: usize,
    pub k_theta: f64,
    /// Common exponent sigma(theta) = max_j sigma_j (iid mode only).
    pub sigma: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SummaryMode {
    General,
    Iid,
}

/// The derived quantities of a polynomial's tail: per-monomial indices and
/// the extremal (starred) data.
#[derive(Clone, Debug, Serialize)]
pub struct IndexSummary {
    pub mode: SummaryMode,
    pub per_theta: Vec<ThetaIndices>,
    pub alpha_star: f64,
    pub k_star: f64,
    /// Positions (into the polynomial's term list) of the extremal monomials.
    pub theta_star: Vec<usize>,
    pub m_star: usize,
    /// sigma* = alpha / alpha* (iid mode only).
    pub sigma_star: Option<f64>,
    /// p* = |J(theta)| for theta in Theta* (iid mode only); satisfies
    /// (k+1) p* - 1 = k*. The source text prints this relation as
    /// "p* = (k*+1)(k+1)", which the defining identity forces to mean
    /// (k*+1)/(k+1); we implement the forced reading.
    pub p_star: Option<usize>,
}

fn k_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn finish_summary(
    mode: SummaryMode,
    per_theta: Vec<ThetaIndices>,
    sigma_star_of: impl Fn(&[ThetaIndices], &[usize]) -> Option<f64>,
) -> IndexSummary {
    let alpha_star = per_theta
        .iter()
        .map(|t| t.alpha_theta)
        .fold(f64::INFINITY, f64::min);
    let k_star = per_theta
        .iter()
        .filter(|t| index_eq(t.alpha_theta, alpha_star))
        .map(|t| t.k_theta)
        .fold(f64::NEG_INFINITY, f64::max);
    let theta_star: Vec<usize> = per_theta
        .iter()
        .enumerate()
        .filter(|(_, t)| index_eq(t.alpha_theta, alpha_star) && k_eq(t.k_theta, k_star))
        .map(|(i, _)| i)
        .collect();
    let m_star = theta_star.len();
    let sigma_star = sigma_star_of(&per_theta, &theta_star);
    let p_star = match mode {
        SummaryMode::Iid => Some(per_theta[theta_star[0]].p),
        SummaryMode::General => None,
    };
    IndexSummary {
        mode,
        per_theta,
        alpha_star,
        k_star,
        theta_star,
        m_star,
        sigma_star,
        p_star,
    }
}

/// Index summary for variables with individual tails (alpha_j, k_j).
/// The minimum in alpha(theta) ranges only over j with sigma_j > 0.
pub fn general_index_summary(f: &Polynomial, tails: &[(f64, f64)]) -> Result<IndexSummary> {
    if tails.len() != f.arity {
        return Err(Error::DimensionMismatch(format!(
            "{} tails for arity {}",
            tails.len(),
            f.arity
        )));
    }
    let per_theta = f
        .terms
        .iter()
        .map(|m| {
            let ratios: Vec<(usize, f64)> = m
                .support()
                .map(|j| (j, tails[j].0 / m.exponents[j]))
                .collect();
            let alpha_theta = ratios.iter().map(|&(_, r)| r).fold(f64::INFINITY, f64::min);
            let j_set: Vec<usize> = ratios
                .iter()
                .filter(|&&(_, r)| index_eq(r, alpha_theta))
                .map(|&(j, _)| j)
                .collect();
            let p = j_set.len();
            let k_theta = (p as f64 - 1.0) + j_set.iter().map(|&j| tails[j].1).sum::<f64>();
            ThetaIndices { alpha_theta, j_set, p, k_theta, sigma: None }
        })
        .collect();
    Ok(finish_summary(SummaryMode::General, per_theta, |_, _| None))
}

/// Index summary for iid variables with common tail (alpha, k):
/// sigma(theta) = max sigma_j, alpha(theta) = alpha / sigma(theta),
/// k(theta) = (k+1) p(theta) - 1.
pub fn iid_index_summary(f: &Polynomial, alpha: f64, k: f64) -> Result<IndexSummary> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0,2), got {alpha}")));
    }
    if k < 0.0 {
        return Err(Error::NegativeLogPower(k));
    }
    let per_theta: Vec<ThetaIndices> = f
        .terms
        .iter()
        .map(|m| {
            let sigma = m.exponents.iter().cloned().fold(0.0f64, f64::max);
            let j_set: Vec<usize> = m
                .exponents
                .iter()
                .enumerate()
                .filter(|(_, &s)| s == sigma)
                .map(|(j, _)| j)
                .collect();
            let p = j_set.len();
            // (k+1)p - 1, evaluated as (p-1) + sum of k over J so the value
            // is bit-identical to the general route with equal tails.
            let k_theta = (p as f64 - 1.0) + j_set.iter().map(|_| k).sum::<f64>();
            ThetaIndices {
                alpha_theta: alpha / sigma,
                j_set,
                p,
                k_theta,
                sigma: Some(sigma),
            }
        })
        .collect();
    let summary = finish_summary(SummaryMode::Iid, per_theta, |per, stars| {
        per[stars[0]].sigma
    });
    // Consistency: sigma* = alpha/alpha* and p* = (k*+1)/(k+1).
    debug_assert!({
        let s = summary.sigma_star.unwrap();
        (s - alpha / summary.alpha_star).abs() < 1e-9 * s
    });
    debug_assert!({
        let p = summary.p_star.unwrap() as f64;
        ((summary.k_star + 1.0) / (k + 1.0) - p).abs() < 1e-9
    });
    Ok(summary)
}

/// Result of the shift/scale pair scans over the extremal monomials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ShiftCheck {
    Holds,
    /// J(theta2) = J(theta1) + r for distinct extremal monomials.
    Violated { theta1: usize, theta2: usize, r: i64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ScaleCheck {
    Holds,
    /// J(theta2) = (num/den) J(theta1) on 1-based positions.
    Violated { theta1: usize, theta2: usize, num: u64, den: u64 },
}

/// Looks for distinct extremal monomials whose J-sets differ by a constant
/// integer shift (the obstruction in the local-dependence case).
pub fn shift_condition(summary: &IndexSummary) -> ShiftCheck {
    let stars = &summary.theta_star;
    for (a, &i) in stars.iter().enumerate() {
        for &j in &stars[a + 1..] {
            let ji = &summary.per_theta[i].j_set;
            let jj = &summary.per_theta[j].j_set;
            if ji.len() != jj.len() {
                continue;
            }
            let r = jj[0] as i64 - ji[0] as i64;
            if ji.iter().zip(jj).all(|(&x, &y)| y as i64 - x as i64 == r) {
                return ShiftCheck::Violated { theta1: i, theta2: j, r };
            }
        }
    }
    ShiftCheck::Holds
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Looks for distinct extremal monomials whose J-sets differ by a positive
/// rational dilation on 1-based positions (the obstruction in the
/// arithmetic-progression case). The candidate ratio is forced by the
/// smallest elements, which makes the scan sound and complete.
pub fn scale_condition(summary: &IndexSummary) -> ScaleCheck {
    let stars = &summary.theta_star;
    for (a, &i) in stars.iter().enumerate() {
        for &j in &stars[a + 1..] {
            let ji: Vec<u64> = summary.per_theta[i].j_set.iter().map(|&x| x as u64 + 1).collect();
            let jj: Vec<u64> = summary.per_theta[j].j_set.iter().map(|&x| x as u64 + 1).collect();
            if ji.len() != jj.len() {
                continue;
            }
            let g = gcd(jj[0], ji[0]);
            let (num, den) = (jj[0] / g, ji[0] / g);
            let maps = ji
                .iter()
                .zip(&jj)
                .all(|(&x, &y)| x * num == y * den);
            if maps {
                return ScaleCheck::Violated { theta1: i, theta2: j, num, den };
            }
        }
    }
    ScaleCheck::Holds
}

/// Factorization of the positive integers along the primes up to `ell`:
/// every n factors uniquely as i * n_q with n_q a product of those primes
/// and i coprime to all of them.
#[derive(Clone, Debug, Serialize)]
pub struct GammaDecomposition {
    pub ell: u64,
    pub primes: Vec<u64>,
    /// Smooth numbers 1 = n_1 < n_2 < ... up to `bound`.
    pub gamma1: Vec<u64>,
    /// Density of the coprime set Z_0: prod (1 - 1/p).
    pub rho: f64,
    pub bound: u64,
}

impl GammaDecomposition {
    /// Splits n into (i, n_q) with n = i * n_q.
    pub fn factor(&self, n: u64) -> (u64, u64) {
        debug_assert!(n >= 1);
        let mut smooth = 1u64;
        let mut rest = n;
        for &p in &self.primes {
            while rest.is_multiple_of(p) {
                rest /= p;
                smooth *= p;
            }
        }
        (rest, smooth)
    }

    /// 1-based rank of a smooth number within gamma1 (the j of n_j).
    pub fn smooth_rank(&self, n_q: u64) -> Option<usize> {
        self.gamma1.binary_search(&n_q).ok().map(|i| i + 1)
    }

    /// True when n has no factor among the primes (n in Z_0).
    pub fn in_z0(&self, n: u64) -> bool {
        self.primes.iter().all(|&p| !n.is_multiple_of(p))
    }
}

fn primes_up_to(ell: u64) -> Vec<u64> {
    let mut primes = Vec::new();
    'outer: for n in 2..=ell {
        for &p in &primes {
            if p * p > n {
                break;
            }
            if n % p == 0 {
                continue 'outer;
            }
        }
        primes.push(n);
    }
    primes
}

/// Enumerates the smooth numbers and the density rho for the primes up to
/// `ell`. `ell = 1` degenerates to gamma1 = [1], rho = 1.
pub fn gamma_decomposition(ell: u64, bound: u64) -> Result<GammaDecomposition> {
    if ell < 1 || bound < 1 {
        return Err(Error::InvalidArgument("ell and bound must be >= 1".into()));
    }
    let primes = primes_up_to(ell);
    let mut gamma1 = vec![1u64];
    for &p in &primes {
        let mut extended = Vec::with_capacity(gamma1.len() * 2);
        for &g in &gamma1 {
            let mut v = g;
            loop {
                extended.push(v);
                match v.checked_mul(p) {
                    Some(w) if w <= bound => v = w,
                    _ => break,
                }
            }
        }
        extended.sort_unstable();
        gamma1 = extended;
    }
    let rho = primes.iter().map(|&p| 1.0 - 1.0 / p as f64).product();
    Ok(GammaDecomposition { ell, primes, gamma1, rho, bound })
}

/// A coloring of {1..N} such that same-colored r != s have disjoint
/// multiplier sets {r, 2r, ..., ell*r} and {s, ..., ell*s}.
#[derive(Clone, Debug)]
pub struct Coloring {
    pub ell: u64,
    /// colors[n - 1] is the color id of n.
    pub colors: Vec<u32>,
    pub color_count: u32,
}

/// Greedy coloring of the conflict graph (edge r ~ s iff i s = j r for some
/// 1 <= i, j <= ell). Vertex degree is at most ell^2, so at most ell^2 + 1
/// colors come out; this is asserted.
pub fn conflict_coloring(ell: u64, n_max: u64) -> Result<Coloring> {
    if ell < 1 || n_max < 1 {
        return Err(Error::InvalidArgument("ell and N must be >= 1".into()));
    }
    // Reduced fractions a/b with 1 <= a, b <= ell; neighbor of n is n*a/b.
    let mut fractions = Vec::new();
    for a in 1..=ell {
        for b in 1..=ell {
            if (a, b) != (1, 1) && gcd(a, b) == 1 {
                fractions.push((a, b));
            }
        }
    }
    let max_colors = (ell * ell + 1) as usize;
    let mut colors = vec![u32::MAX; n_max as usize];
    let mut used = vec![false; max_colors + 1];
    let mut count = 0u32;
    for n in 1..=n_max {
        for u in used.iter_mut() {
            *u = false;
        }
        for &(a, b) in &fractions {
            if n.is_multiple_of(b) {
                if let Some(m) = (n / b).checked_mul(a) {
                    if m <= n_max && m != n {
                        let c = colors[(m - 1) as usize];
                        if c != u32::MAX {
                            used[c as usize] = true;
                        }
                    }
                }
            }
        }
        let c = used
            .iter()
            .position(|&u| !u)
            .expect("degree bound guarantees a free color") as u32;
        assert!(
            (c as usize) < max_colors,
            "coloring exceeded ell^2 + 1 colors, contradicting the degree bound"
        );
        colors[(n - 1) as usize] = c;
        count = count.max(c + 1);
    }
    Ok(Coloring { ell, colors, color_count: count })
}

/// Exhaustive disjointness verification: for every integer v <= ell*N, all
/// r <= N with v in {r, ..., ell r} must carry pairwise distinct colors.
pub fn verify_coloring(c: &Coloring) -> bool {
    let n_max = c.colors.len() as u64;
    let mut gens: Vec<u32> = Vec::with_capacity(c.ell as usize);
    for v in 1..=c.ell * n_max {
        gens.clear();
        for i in 1..=c.ell {
            if v.is_multiple_of(i) {
                let r = v / i;
                if r >= 1 && r <= n_max {
                    gens.push(c.colors[(r - 1) as usize]);
                }
            }
        }
        gens.sort_unstable();
        if gens.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
    }
    true
}

/// The partition of {(n_j, theta): j <= q, theta in Theta*} by equality of
/// the dilated position sets n_j * J(theta) (1-based positions).
#[derive(Clone, Debug, Serialize)]
pub struct EquivalencePartition {
    /// Each class lists (j, theta) with j the 1-based gamma1 rank and theta
    /// the term position in the polynomial.
    pub classes: Vec<Vec<(usize, usize)>>,
    pub all_singletons: bool,
}

pub fn equivalence_classes(
    decomp: &GammaDecomposition,
    summary: &IndexSummary,
    q: usize,
) -> Result<EquivalencePartition> {
    if summary.mode != SummaryMode::Iid {
        return Err(Error::InvalidArgument(
            "equivalence classes are defined for the iid summary".into(),
        ));
    }
    if q < 1 || q > decomp.gamma1.len() {
        return Err(Error::InvalidArgument(format!(
            "q must lie in [1, {}], got {q}",
            decomp.gamma1.len()
        )));
    }
    let mut keyed: Vec<(Vec<u64>, (usize, usize))> = Vec::new();
    for j in 1..=q {
        let n_j = decomp.gamma1[j - 1];
        for &theta in &summary.theta_star {
            let mut key: Vec<u64> = summary.per_theta[theta]
                .j_set
                .iter()
                .map(|&pos| (pos as u64 + 1) * n_j)
                .collect();
            key.sort_unstable();
            keyed.push((key, (j, theta)));
        }
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut classes: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut current_key: Option<&Vec<u64>> = None;
    for (key, member) in &keyed {
        if current_key != Some(key) {
            classes.push(Vec::new());
        }
        classes.last_mut().unwrap().push(*member);
        current_key = Some(key);
    }
    let all_singletons = classes.iter().all(|c| c.len() == 1);
    Ok(EquivalencePartition { classes, all_singletons })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tailspec::Monomial;

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

    #[test]
    fn general_summary_single_variable() {
        let f = poly(&[(&[1.0], 1.0)]);
        let s = general_index_summary(&f, &[(1.5, 0.0)]).unwrap();
        assert_eq!(s.alpha_star, 1.5);
        assert_eq!(s.k_star, 0.0);
        assert_eq!(s.theta_star, vec![0]);
    }

    #[test]
    fn general_summary_product_with_logs() {
        let f = poly(&[(&[1.0, 1.0], 1.0)]);
        let s = general_index_summary(&f, &[(1.0, 0.0), (1.0, 2.0)]).unwrap();
        let t = &s.per_theta[0];
        assert_eq!(t.alpha_theta, 1.0);
        assert_eq!(t.j_set, vec![0, 1]);
        assert_eq!(t.p, 2);
        assert_eq!(t.k_theta, 3.0);
    }

    #[test]
    fn general_summary_mixed_terms() {
        let f = poly(&[(&[2.0, 1.0, 0.0], 1.0), (&[0.0, 0.0, 1.0], 1.0)]);
        let s = general_index_summary(&f, &[(1.0, 0.0), (1.0, 0.0), (0.5, 1.0)]).unwrap();
        assert_eq!(s.per_theta[0].alpha_theta, 0.5);
        assert_eq!(s.per_theta[0].j_set, vec![0]);
        assert_eq!(s.per_theta[0].k_theta, 0.0);
        assert_eq!(s.per_theta[1].alpha_theta, 0.5);
        assert_eq!(s.per_theta[1].j_set, vec![2]);
        assert_eq!(s.per_theta[1].k_theta, 1.0);
        assert_eq!(s.alpha_star, 0.5);
        assert_eq!(s.k_star, 1.0);
        assert_eq!(s.theta_star, vec![1]);
    }

    #[test]
    fn iid_summary_example() {
        let f = poly(&[(&[2.0, 2.0, 1.0], 1.0), (&[3.0, 0.0, 0.0], 1.0)]);
        let s = iid_index_summary(&f, 1.2, 0.0).unwrap();
        assert_eq!(s.per_theta[0].sigma, Some(2.0));
        assert_eq!(s.per_theta[0].j_set, vec![0, 1]);
        assert!((s.per_theta[0].alpha_theta - 0.6).abs() < 1e-15);
        assert_eq!(s.per_theta[0].k_theta, 1.0);
        assert_eq!(s.per_theta[1].sigma, Some(3.0));
        assert!((s.per_theta[1].alpha_theta - 0.4).abs() < 1e-15);
        assert_eq!(s.per_theta[1].k_theta, 0.0);
        assert!((s.alpha_star - 0.4).abs() < 1e-15);
        assert_eq!(s.k_star, 0.0);
        assert_eq!(s.theta_star, vec![1]);
        assert_eq!(s.sigma_star, Some(3.0));
        assert_eq!(s.p_star, Some(1));
    }

    #[test]
    fn iid_summary_sum_of_variables() {
        let f = poly(&[(&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0)]);
        let s = iid_index_summary(&f, 0.9, 2.0).unwrap();
        assert_eq!(s.theta_star, vec![0, 1]);
        assert_eq!(s.sigma_star, Some(1.0));
        assert_eq!(s.p_star, Some(1));
        assert_eq!(s.k_star, 2.0);
    }

    #[test]
    fn shift_condition_detects_constant_shift() {
        let f = poly(&[(&[2.0, 2.0, 0.0], 1.0), (&[0.0, 2.0, 2.0], 1.0)]);
        let s = iid_index_summary(&f, 1.0, 0.0).unwrap();
        match shift_condition(&s) {
            ShiftCheck::Violated { r, .. } => assert_eq!(r, 1),
            ShiftCheck::Holds => panic!("expected violation"),
        }
    }

    #[test]
    fn shift_condition_holds_without_shift() {
        // J-sets {1,3} and {1,2} (1-based): no constant shift.
        let f = poly(&[(&[2.0, 1.0, 2.0], 1.0), (&[2.0, 2.0, 1.0], 1.0)]);
        let s = iid_index_summary(&f, 1.0, 0.0).unwrap();
        assert_eq!(shift_condition(&s), ShiftCheck::Holds);
        let singleton = poly(&[(&[1.0], 1.0)]);
        let s1 = iid_index_summary(&singleton, 1.0, 0.0).unwrap();
        assert_eq!(shift_condition(&s1), ShiftCheck::Holds);
    }

    #[test]
    fn scale_condition_examples() {
        // J-sets {1} and {2}: violated with r = 2.
        let f = poly(&[(&[2.0, 1.0], 1.0), (&[1.0, 2.0], 1.0)]);
        let s = iid_index_summary(&f, 1.0, 0.0).unwrap();
        match scale_condition(&s) {
            ScaleCheck::Violated { num, den, .. } => {
                assert_eq!((num, den), (2, 1));
            }
            ScaleCheck::Holds => panic!("expected violation"),
        }
        // J-sets {1,2} and {1,3}: no dilation.
        let g = poly(&[(&[2.0, 2.0, 1.0], 1.0), (&[2.0, 1.0, 2.0], 1.0)]);
        let sg = iid_index_summary(&g, 1.0, 0.0).unwrap();
        assert_eq!(scale_condition(&sg), ScaleCheck::Holds);
        // Identical J-sets in distinct monomials: violated with r = 1.
        let h = poly(&[(&[2.0, 1.0, 0.0], 1.0), (&[2.0, 0.0, 1.0], 1.0)]);
        let sh = iid_index_summary(&h, 1.0, 0.0).unwrap();
        match scale_condition(&sh) {
            ScaleCheck::Violated { num, den, .. } => assert_eq!((num, den), (1, 1)),
            ScaleCheck::Holds => panic!("expected violation"),
        }
    }

    #[test]
    fn gamma_decomposition_ell2() {
        let d = gamma_decomposition(2, 16).unwrap();
        assert_eq!(d.gamma1, vec![1, 2, 4, 8, 16]);
        assert_eq!(d.rho, 0.5);
        assert_eq!(d.factor(12), (3, 4));
        assert!(d.in_z0(7));
        assert!(!d.in_z0(6));
    }

    #[test]
    fn gamma_decomposition_ell3() {
        let d = gamma_decomposition(3, 12).unwrap();
        assert_eq!(d.gamma1, vec![1, 2, 3, 4, 6, 8, 9, 12]);
        assert!((d.rho - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn coloring_small_graph() {
        let c = conflict_coloring(2, 6).unwrap();
        assert!(c.color_count <= 5);
        assert!(verify_coloring(&c));
        // 1~2, 2~4, 3~6 must be separated.
        assert_ne!(c.colors[0], c.colors[1]);
        assert_ne!(c.colors[1], c.colors[3]);
        assert_ne!(c.colors[2], c.colors[5]);
    }

    #[test]
    fn coloring_ell1_single_color() {
        let c = conflict_coloring(1, 100).unwrap();
        assert_eq!(c.color_count, 1);
        assert!(verify_coloring(&c));
    }

    #[test]
    fn equivalence_classes_sum_of_two() {
        let f = poly(&[(&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0)]);
        let s = iid_index_summary(&f, 1.0, 0.0).unwrap();
        let d = gamma_decomposition(2, 16).unwrap();
        let part = equivalence_classes(&d, &s, 3).unwrap();
        // (1,t0)->{1}; (2,t0)~(1,t1)->{2}; (4,t0)~(2,t1)->{4}; (4,t1)->{8}.
        assert_eq!(part.classes.len(), 4);
        assert!(!part.all_singletons);
        let sizes: Vec<usize> = part.classes.iter().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![1, 2, 2, 1]);
    }

    #[test]
    fn equivalence_classes_single_monomial_product() {
        let f = poly(&[(&[1.0, 1.0], 1.0)]);
        let s = iid_index_summary(&f, 1.0, 0.0).unwrap();
        let d = gamma_decomposition(2, 64).unwrap();
        let part = equivalence_classes(&d, &s, 5).unwrap();
        assert!(part.all_singletons);
        assert_eq!(part.classes.len(), 5);
    }
}
