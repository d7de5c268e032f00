//! Shared numerical utilities: compensated summation, adaptive quadrature,
//! special functions and order-statistics helpers.

use statrs::function::gamma::ln_gamma;

/// Neumaier compensated accumulator. Partial-sum paths of heavy-tailed
/// summands mix magnitudes across many orders; plain summation loses the
/// small terms that the centering later needs.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

// Gauss-Kronrod 15-point rule on [-1, 1]; abscissae/weights from the
// standard tables (QUADPACK dqk15).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).abs())
}

/// Adaptive Gauss-Kronrod integration of `f` on [a, b].
///
/// Splits the worst interval until the summed error estimate is below
/// `abs_tol + rel_tol * |integral|` or the interval budget runs out.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut stack = vec![(a, b)];
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut done: Vec<(f64, f64, f64, f64)> = Vec::new();
    // First pass: refine everything to local tolerance.
    while let Some((lo, hi)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        let local_tol = (abs_tol + rel_tol * val.abs()).max(1e-300);
        if err <= local_tol || (hi - lo) < 1e-14 * (b - a).abs() || done.len() + stack.len() > 4000 {
            done.push((lo, hi, val, err));
            total += val;
            total_err += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid));
            stack.push((mid, hi));
        }
    }
    // Second pass: if the global error is still too large, split the worst
    // intervals further.
    let mut rounds = 0;
    while total_err > abs_tol + rel_tol * total.abs() && rounds < 40 && done.len() < 8000 {
        done.sort_by(|p, q| p.3.partial_cmp(&q.3).unwrap());
        let (lo, hi, val, err) = done.pop().unwrap();
        total -= val;
        total_err -= err;
        let mid = 0.5 * (lo + hi);
        for (x, y) in [(lo, mid), (mid, hi)] {
            let (v, e) = gk15(&f, x, y);
            done.push((x, y, v, e));
            total += v;
            total_err += e;
        }
        rounds += 1;
    }
    let mut acc = KahanSum::new();
    for &(_, _, v, _) in &done {
        acc.add(v);
    }
    acc.value()
}

/// ∫_{y0}^∞ e^{-λ y} y^k dy for λ > 0, y0 > 0, any real k (k > -1 not
/// required since y0 > 0). Integrates on a finite window and bounds the
/// remainder analytically.
pub fn exp_poly_tail(lambda: f64, k: f64, y0: f64) -> f64 {
    assert!(lambda > 0.0 && y0 > 0.0);
    let mut upper = y0 + (40.0 + 2.0 * k.abs()) / lambda;
    loop {
        // For y >= upper with lambda*upper > 2k the integrand decays at
        // least like e^{-lambda y/2} relative to its left edge.
        let edge = (-lambda * upper).exp() * upper.powf(k.max(0.0)) * (1.0 + y0.powf(k.min(0.0)));
        if edge / lambda < 1e-18 * (1.0 + upper.powf(k)) || upper > y0 + 4000.0 / lambda {
            break;
        }
        upper += 20.0 / lambda;
    }
    integrate(|y| (-lambda * y).exp() * y.powf(k), y0, upper, 1e-11, 1e-300)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Euler Beta function B(a, b).
pub fn beta(a: f64, b: f64) -> f64 {
    ln_beta(a, b).exp()
}

pub fn gamma_fn(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Median of a slice (copies and sorts).
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    assert!(!xs.is_empty());
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted_quantile(&v, p)
}

pub fn sorted_quantile(v: &[f64], p: f64) -> f64 {
    let n = v.len();
    if n == 1 {
        return v[0];
    }
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = h.floor() as usize;
    let frac = h - i as f64;
    if i + 1 < n {
        v[i] * (1.0 - frac) + v[i + 1] * frac
    } else {
        v[n - 1]
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value() / xs.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let mut var = KahanSum::new();
    for &x in xs {
        var.add((x - m) * (x - m));
    }
    let v = var.value() / (n - 1.0).max(1.0);
    (m, (v / n).sqrt())
}

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// One-sample KS distance of `samples` against a CDF.
pub fn ks_vs_cdf<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let c = cdf(x);
        d = d.max((c - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - c).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 0.0);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn integrates_oscillatory() {
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 0.0);
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn exp_poly_tail_matches_gamma() {
        // ∫_0⁺^∞ e^{-y} y^2 dy = Γ(3) = 2, minus the [0, y0] head.
        let y0 = 0.5;
        let full = 2.0;
        let head = integrate(|y| (-y).exp() * y * y, 1e-12, y0, 1e-12, 0.0);
        let tail = exp_poly_tail(1.0, 2.0, y0);
        assert!((tail - (full - head)).abs() < 1e-9);
    }

    #[test]
    fn beta_identity_small_values() {
        assert!((beta(1.0, 1.0) - 1.0).abs() < 1e-14);
        assert!((beta(2.0, 3.0) - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert!((quantile(&xs, 0.5) - 1.5).abs() < 1e-15);
        assert_eq!(quantile(&xs, 0.0), 0.0);
        assert_eq!(quantile(&xs, 1.0), 3.0);
    }

    #[test]
    fn kahan_keeps_small_terms() {
        let mut s = KahanSum::new();
        s.add(1e16);
        for _ in 0..10_000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10_000.0);
    }
}
