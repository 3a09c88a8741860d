//! Exact permutation-null moments of the within-sample kernel averages.
//!
//! For a cut `t`, `alpha_a(t)` is the mean of kernel `a` over ordered pairs
//! `i != j` inside the first `t` observations and `beta_a(t)` the same over the
//! remaining `n - t`. Everything here is a function of a handful of kernel
//! summaries that are computed once per pair of kernels.

mod cross;

pub use cross::{
    cross_time_correlation, finite_sample_slope, part_cov, process_cov, process_mean, process_variance, Part,
    Process,
};

use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;
use crate::numeric::{compensated_sum, CompensatedSum};

/// Index-overlap sums for a pair of kernels `(a, b)`:
/// `a = sum_{i != j} k_a(i,j) k_b(i,j)`,
/// `b = sum over distinct (i, j, u) of k_a(i,j) k_b(i,u)`,
/// `c = sum over distinct (i, j, u, v) of k_a(i,j) k_b(u,v)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairScalars {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Kernel summaries needed by every moment computation.
///
/// Two versions of the pair scalars are kept: on the raw kernels and on the
/// centred kernels `k - kbar` (off-diagonal). Covariances are evaluated from
/// the centred ones, which avoids subtracting two nearly equal numbers.
#[derive(Clone, Debug)]
pub struct MomentCache {
    n: usize,
    kbar: [f64; 2],
    total: [f64; 2],
    row_sums: [Vec<f64>; 2],
    raw: [[PairScalars; 2]; 2],
    centered: [[PairScalars; 2]; 2],
    mean_square: [f64; 2],
}

fn pair_scalars(ka: &KernelMatrix, kb: &KernelMatrix, ra: &[f64], rb: &[f64], sa: f64, sb: f64, shift: [f64; 2]) -> PairScalars {
    let n = ka.n();
    let mut a = CompensatedSum::new();
    for i in 0..n {
        let (rowa, rowb) = (ka.row(i), kb.row(i));
        for j in 0..n {
            if i != j {
                a.add((rowa[j] - shift[0]) * (rowb[j] - shift[1]));
            }
        }
    }
    let a = a.value();
    let b = compensated_sum(ra.iter().zip(rb).map(|(x, y)| x * y)) - a;
    let c = sa * sb - 2.0 * a - 4.0 * b;
    PairScalars { a, b, c }
}

/// Precomputes the moment summaries of two kernels over the same `n` observations.
///
/// Pass the same matrix twice for a single-kernel analysis.
pub fn build_cache(k1: &KernelMatrix, k2: &KernelMatrix) -> Result<MomentCache> {
    let n = k1.n();
    if k2.n() != n {
        return Err(Error::param(format!("kernel sizes differ: {} vs {}", n, k2.n())));
    }
    if n < 4 {
        return Err(Error::param(format!("need at least 4 observations, got {n}")));
    }
    let ks = [k1, k2];
    let row_sums: [Vec<f64>; 2] = ks.map(|k| {
        (0..n)
            .map(|i| compensated_sum(k.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v)))
            .collect()
    });
    let total = [compensated_sum(row_sums[0].iter().copied()), compensated_sum(row_sums[1].iter().copied())];
    let pairs = (n * (n - 1)) as f64;
    let kbar = total.map(|s| s / pairs);
    let centered_rows: [Vec<f64>; 2] = [0, 1].map(|x| {
        let shift = (n - 1) as f64 * kbar[x];
        row_sums[x].iter().map(|r| r - shift).collect()
    });
    let centered_total = [0, 1].map(|x| compensated_sum(centered_rows[x].iter().copied()));

    let mut raw = [[PairScalars::default(); 2]; 2];
    let mut centered = raw;
    for a in 0..2 {
        for b in 0..2 {
            raw[a][b] = pair_scalars(ks[a], ks[b], &row_sums[a], &row_sums[b], total[a], total[b], [0.0, 0.0]);
            centered[a][b] = pair_scalars(
                ks[a],
                ks[b],
                &centered_rows[a],
                &centered_rows[b],
                centered_total[a],
                centered_total[b],
                [kbar[a], kbar[b]],
            );
        }
    }
    let mean_square = [0, 1].map(|x| raw[x][x].a / pairs);
    Ok(MomentCache {
        n,
        kbar,
        total,
        row_sums,
        raw,
        centered,
        mean_square,
    })
}

impl MomentCache {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mean off-diagonal entry of kernel `x` (0 or 1).
    pub fn kbar(&self, x: usize) -> f64 {
        self.kbar[x]
    }

    /// Sum of all off-diagonal entries of kernel `x`.
    pub fn total(&self, x: usize) -> f64 {
        self.total[x]
    }

    /// Off-diagonal row sums of kernel `x`.
    pub fn row_sums(&self, x: usize) -> &[f64] {
        &self.row_sums[x]
    }

    pub fn raw(&self, a: usize, b: usize) -> PairScalars {
        self.raw[a][b]
    }

    pub fn centered(&self, a: usize, b: usize) -> PairScalars {
        self.centered[a][b]
    }

    /// Mean squared off-diagonal entry of kernel `x`; sets the scale of the
    /// zero-variance threshold.
    pub fn mean_square(&self, x: usize) -> f64 {
        self.mean_square[x]
    }
}

/// Means and covariances of `(alpha_1, beta_1, alpha_2, beta_2)` at one cut.
///
/// `cov_alpha[a][b] = cov(alpha_a, alpha_b)`, `cov_beta` likewise and
/// `cov_alpha_beta[a][b] = cov(alpha_a, beta_b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeMoments {
    pub t: usize,
    pub mean_alpha: [f64; 2],
    pub mean_beta: [f64; 2],
    pub cov_alpha: [[f64; 2]; 2],
    pub cov_beta: [[f64; 2]; 2],
    pub cov_alpha_beta: [[f64; 2]; 2],
}

fn check_cut(n: usize, t: usize) -> Result<()> {
    if t < 2 || t + 2 > n {
        return Err(Error::param(format!("cut t={t} outside [2, {}]", n.saturating_sub(2))));
    }
    Ok(())
}

fn probabilities(n: usize, m: usize) -> [f64; 3] {
    let (n, m) = (n as f64, m as f64);
    let p1 = m * (m - 1.0) / (n * (n - 1.0));
    let p2 = p1 * (m - 2.0) / (n - 2.0);
    let p3 = p2 * (m - 3.0) / (n - 3.0);
    [p1, p2, p3]
}

fn moments_from(n: usize, t: usize, kbar: [f64; 2], s: &[[PairScalars; 2]; 2], subtract_means: bool) -> TimeMoments {
    let p = probabilities(n, t);
    let q = probabilities(n, n - t);
    let (tf, uf, nf) = (t as f64, (n - t) as f64, n as f64);
    let da = (tf * (tf - 1.0)).powi(2);
    let db = (uf * (uf - 1.0)).powi(2);
    let n4 = nf * (nf - 1.0) * (nf - 2.0) * (nf - 3.0);
    let mut m = TimeMoments {
        t,
        mean_alpha: kbar,
        mean_beta: kbar,
        cov_alpha: [[0.0; 2]; 2],
        cov_beta: [[0.0; 2]; 2],
        cov_alpha_beta: [[0.0; 2]; 2],
    };
    for a in 0..2 {
        for b in 0..2 {
            let PairScalars { a: sa, b: sb, c: sc } = s[a][b];
            let prod = if subtract_means { kbar[a] * kbar[b] } else { 0.0 };
            m.cov_alpha[a][b] = (2.0 * sa * p[0] + 4.0 * sb * p[1] + sc * p[2]) / da - prod;
            m.cov_beta[a][b] = (2.0 * sa * q[0] + 4.0 * sb * q[1] + sc * q[2]) / db - prod;
            m.cov_alpha_beta[a][b] = sc / n4 - prod;
        }
    }
    m
}

/// Exact permutation means and covariances at cut `t` (`2 <= t <= n - 2`).
pub fn time_moments(cache: &MomentCache, t: usize) -> Result<TimeMoments> {
    check_cut(cache.n, t)?;
    Ok(moments_from(cache.n, t, cache.kbar, &cache.centered, false))
}

/// Same quantities evaluated literally from the raw kernel sums, i.e.
/// second moment minus product of means. Numerically weaker than
/// [`time_moments`]; kept for cross-checking.
pub fn time_moments_raw(cache: &MomentCache, t: usize) -> Result<TimeMoments> {
    check_cut(cache.n, t)?;
    Ok(moments_from(cache.n, t, cache.kbar, &cache.raw, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelKind;
    use rand::{Rng, SeedableRng};

    pub(crate) fn random_kernel(n: usize, seed: u64) -> KernelMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
        KernelMatrix::from_fn(n, KernelKind::External, |i, j| if i == j { 1.0 } else { vals[i * n + j] }).unwrap()
    }

    fn brute_scalars(ka: &KernelMatrix, kb: &KernelMatrix) -> PairScalars {
        let n = ka.n();
        let mut s = PairScalars::default();
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                s.a += ka.get(i, j) * kb.get(i, j);
                for u in 0..n {
                    if u == i || u == j {
                        continue;
                    }
                    s.b += ka.get(i, j) * kb.get(i, u);
                    for v in 0..n {
                        if v != i && v != j && v != u {
                            s.c += ka.get(i, j) * kb.get(u, v);
                        }
                    }
                }
            }
        }
        s
    }

    #[test]
    fn scalars_match_quadruple_loop() {
        for n in [4, 7, 11] {
            let (k1, k2) = (random_kernel(n, n as u64), random_kernel(n, 100 + n as u64));
            let cache = build_cache(&k1, &k2).unwrap();
            for (a, b, ka, kb) in [(0, 0, &k1, &k1), (0, 1, &k1, &k2), (1, 1, &k2, &k2)] {
                let want = brute_scalars(ka, kb);
                let got = cache.raw(a, b);
                let scale = want.c.abs().max(1.0);
                assert!((got.a - want.a).abs() < 1e-10 * scale);
                assert!((got.b - want.b).abs() < 1e-10 * scale);
                assert!((got.c - want.c).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn raw_and_centered_routes_agree() {
        let (k1, k2) = (random_kernel(30, 1), random_kernel(30, 2));
        let cache = build_cache(&k1, &k2).unwrap();
        for t in 2..=28 {
            let c = time_moments(&cache, t).unwrap();
            let r = time_moments_raw(&cache, t).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    assert!((c.cov_alpha[a][b] - r.cov_alpha[a][b]).abs() < 1e-9);
                    assert!((c.cov_beta[a][b] - r.cov_beta[a][b]).abs() < 1e-9);
                    assert!((c.cov_alpha_beta[a][b] - r.cov_alpha_beta[a][b]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn cut_bounds() {
        let k = random_kernel(6, 3);
        let cache = build_cache(&k, &k).unwrap();
        assert!(time_moments(&cache, 1).is_err());
        assert!(time_moments(&cache, 5).is_err());
        assert!(time_moments(&cache, 4).is_ok());
        assert!(build_cache(&random_kernel(3, 1), &random_kernel(3, 1)).is_err());
        assert!(build_cache(&random_kernel(5, 1), &random_kernel(6, 1)).is_err());
    }
}
