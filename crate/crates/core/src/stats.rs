//! Statistical helpers for the diagnostics: univariate distance correlation
//! (O(n log n) via order statistics and a Fenwick tree, so permutation tests
//! stay tractable at ensemble scale) and empirical characteristic functions.

use rayon::prelude::*;

use crate::rng;

/// Fenwick tree accumulating (count, sum x, sum y, sum xy) per y-rank.
struct PairFenwick {
    cnt: Vec<f64>,
    sx: Vec<f64>,
    sy: Vec<f64>,
    sxy: Vec<f64>,
}

impl PairFenwick {
    fn new(n: usize) -> Self {
        PairFenwick {
            cnt: vec![0.0; n + 1],
            sx: vec![0.0; n + 1],
            sy: vec![0.0; n + 1],
            sxy: vec![0.0; n + 1],
        }
    }

    fn reset(&mut self) {
        for v in [&mut self.cnt, &mut self.sx, &mut self.sy, &mut self.sxy] {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    #[inline]
    fn add(&mut self, rank: usize, x: f64, y: f64) {
        let mut i = rank + 1;
        while i < self.cnt.len() {
            self.cnt[i] += 1.0;
            self.sx[i] += x;
            self.sy[i] += y;
            self.sxy[i] += x * y;
            i += i & i.wrapping_neg();
        }
    }

    /// Totals over ranks <= rank.
    #[inline]
    fn prefix(&self, rank: usize) -> (f64, f64, f64, f64) {
        let mut i = rank + 1;
        let (mut c, mut x, mut y, mut xy) = (0.0, 0.0, 0.0, 0.0);
        while i > 0 {
            c += self.cnt[i];
            x += self.sx[i];
            y += self.sy[i];
            xy += self.sxy[i];
            i -= i & i.wrapping_neg();
        }
        (c, x, y, xy)
    }
}

/// Sum over pairs of |x_i - x_j| |y_i - y_j| in O(n log n); `order` indexes
/// the points in ascending x, `yrank` gives each point's rank in the sorted
/// y values.
fn cross_distance_sum(
    xs_sorted: &[f64],
    ys_in_x_order: &[f64],
    yranks_in_x_order: &[usize],
    fen: &mut PairFenwick,
) -> f64 {
    fen.reset();
    let mut total = 0.0;
    let (mut tc, mut tx, mut ty, mut txy) = (0.0, 0.0, 0.0, 0.0);
    for (i, &xj) in xs_sorted.iter().enumerate() {
        let yj = ys_in_x_order[i];
        let rj = yranks_in_x_order[i];
        let (c_le, x_le, y_le, xy_le) = fen.prefix(rj);
        // Pairs with y_i <= y_j: (x_j - x_i)(y_j - y_i).
        total += c_le * xj * yj - xj * y_le - yj * x_le + xy_le;
        // Pairs with y_i > y_j: (x_j - x_i)(y_i - y_j).
        let (c_gt, x_gt, y_gt, xy_gt) = (tc - c_le, tx - x_le, ty - y_le, txy - xy_le);
        total += xj * y_gt - c_gt * xj * yj - xy_gt + yj * x_gt;
        fen.add(rj, xj, yj);
        tc += 1.0;
        tx += xj;
        ty += yj;
        txy += xj * yj;
    }
    2.0 * total
}

/// Row sums a_i = sum_j |v_i - v_j| for all i, plus the grand total, in
/// O(n log n).
fn distance_row_sums(v: &[f64]) -> (Vec<f64>, f64) {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &i in &idx {
        prefix.push(prefix.last().unwrap() + v[i]);
    }
    let total_sum = prefix[n];
    let mut rows = vec![0.0; n];
    let mut grand = 0.0;
    for (r, &i) in idx.iter().enumerate() {
        let x = v[i];
        let below = x * r as f64 - prefix[r];
        let above = (total_sum - prefix[r + 1]) - x * (n - r - 1) as f64;
        rows[i] = below + above;
        grand += rows[i];
    }
    (rows, grand)
}

fn dvar_sq(v: &[f64], rows: &[f64], grand: f64) -> f64 {
    let n = v.len() as f64;
    let sum: f64 = v.iter().sum();
    let sum2: f64 = v.iter().map(|x| x * x).sum();
    // sum over pairs of (v_i - v_j)^2 = 2 n sum2 - 2 sum^2.
    let d2 = 2.0 * (n * sum2 - sum * sum);
    let s2: f64 = rows.iter().map(|r| r * r).sum();
    (d2 / (n * n) - 2.0 * s2 / (n * n * n) + (grand / (n * n)) * (grand / (n * n))).max(0.0)
}

/// Squared distance covariance (V-statistic) for univariate samples.
fn dcov_sq_parts(
    xs_sorted: &[f64],
    x_rows_in_x_order: &[f64],
    x_grand: f64,
    ys_in_x_order: &[f64],
    yranks: &[usize],
    fen: &mut PairFenwick,
) -> f64 {
    let n = xs_sorted.len() as f64;
    let d = cross_distance_sum(xs_sorted, ys_in_x_order, yranks, fen);
    let (y_rows, y_grand) = distance_row_sums(ys_in_x_order);
    let s2: f64 = x_rows_in_x_order
        .iter()
        .zip(&y_rows)
        .map(|(a, b)| a * b)
        .sum();
    (d / (n * n) - 2.0 * s2 / (n * n * n) + (x_grand / (n * n)) * (y_grand / (n * n))).max(0.0)
}

/// Distance correlation of two univariate samples (V-statistic convention).
pub fn distance_correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let xs_sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys_in_x: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut y_order: Vec<usize> = (0..n).collect();
    y_order.sort_by(|&a, &b| ys_in_x[a].partial_cmp(&ys_in_x[b]).unwrap());
    let mut yranks = vec![0usize; n];
    for (r, &i) in y_order.iter().enumerate() {
        yranks[i] = r;
    }
    let (x_rows, x_grand) = distance_row_sums(&xs_sorted);
    let (y_rows, y_grand) = distance_row_sums(&ys_in_x);
    let vx = dvar_sq(&xs_sorted, &x_rows, x_grand);
    let vy = dvar_sq(&ys_in_x, &y_rows, y_grand);
    if vx <= 0.0 || vy <= 0.0 {
        return 0.0;
    }
    let mut fen = PairFenwick::new(n);
    let v = dcov_sq_parts(&xs_sorted, &x_rows, x_grand, &ys_in_x, &yranks, &mut fen);
    (v / (vx * vy).sqrt()).max(0.0).sqrt()
}

/// Distance-correlation permutation test: permutes the pairing of y against
/// x `n_perms` times (derived streams, parallel but order-independent) and
/// returns (observed statistic, permutation p-value).
pub fn dcor_permutation_test(x: &[f64], y: &[f64], n_perms: u32, seed: u64) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let xs_sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys_in_x: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let (x_rows, x_grand) = distance_row_sums(&xs_sorted);
    let vx = dvar_sq(&xs_sorted, &x_rows, x_grand);
    let (y_rows0, y_grand0) = distance_row_sums(&ys_in_x);
    let vy = dvar_sq(&ys_in_x, &y_rows0, y_grand0);
    if vx <= 0.0 || vy <= 0.0 {
        return (0.0, 1.0);
    }
    let mut y_order: Vec<usize> = (0..n).collect();
    y_order.sort_by(|&a, &b| ys_in_x[a].partial_cmp(&ys_in_x[b]).unwrap());
    let mut yranks = vec![0usize; n];
    for (r, &i) in y_order.iter().enumerate() {
        yranks[i] = r;
    }
    let mut fen = PairFenwick::new(n);
    let observed_cov = dcov_sq_parts(&xs_sorted, &x_rows, x_grand, &ys_in_x, &yranks, &mut fen);
    let observed = (observed_cov / (vx * vy).sqrt()).max(0.0).sqrt();

    // dVar_y is permutation-invariant, so comparing dCov^2 is equivalent to
    // comparing dCor; permute the (y value, y rank) assignment to x slots.
    let perm_key = rng::derive(seed, "dcor.permutation");
    let exceed: u64 = (0..n_perms)
        .into_par_iter()
        .map(|p| {
            let mut perm: Vec<usize> = (0..n).collect();
            rng::Stream::new(rng::derive_idx(perm_key, p as u64)).shuffle(&mut perm);
            let ys_p: Vec<f64> = perm.iter().map(|&i| ys_in_x[i]).collect();
            let yranks_p: Vec<usize> = perm.iter().map(|&i| yranks[i]).collect();
            let mut fen_local = PairFenwick::new(n);
            let cov = dcov_sq_parts(&xs_sorted, &x_rows, x_grand, &ys_p, &yranks_p, &mut fen_local);
            u64::from(cov >= observed_cov)
        })
        .sum();
    let p_value = (1.0 + exceed as f64) / (1.0 + n_perms as f64);
    (observed, p_value)
}

/// Empirical characteristic function (1/n) sum e^{i xi v} at one frequency.
pub fn empirical_cf(samples: &[f64], xi: f64) -> (f64, f64) {
    let mut re = 0.0;
    let mut im = 0.0;
    for &v in samples {
        let (s, c) = (xi * v).sin_cos();
        re += c;
        im += s;
    }
    let n = samples.len() as f64;
    (re / n, im / n)
}

/// Clips values at the given magnitude: x -> sign(x) min(|x|, cap).
pub fn clip(values: &[f64], cap: f64) -> Vec<f64> {
    values
        .iter()
        .map(|&v| v.clamp(-cap, cap))
        .collect()
}
