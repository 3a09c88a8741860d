//! Covariances across two cuts `s` and `t`.
//!
//! With `lo = min(s, t)` and `hi = max(s, t)` the positions split into three
//! blocks `[0, lo)`, `[lo, hi)`, `[hi, n)`, and every within-sample average at
//! either cut is a sum over ordered pairs drawn from a union of blocks. The
//! covariance of two such sums only depends on how many ways the indices of
//! the two pairs can be placed into those blocks without collision, so it
//! reduces to the pair scalars times placement counts. At `s == t` this
//! collapses to the single-cut formulas in the parent module.

use super::MomentCache;
use crate::numeric::falling;

/// Which side of a cut an average is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Alpha,
    Beta,
}

/// A scan process built from one kernel (`kernel` is 0 or 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Process {
    /// `D(t) = (t(t-1) alpha - (n-t)(n-t-1) beta) / (n(n-1))`
    D { kernel: usize },
    /// `W_r(t) = r (t/n) alpha + ((n-t)/n) beta`; `r = 1` is the plain `W`.
    W { kernel: usize, r: f64 },
}

impl Process {
    pub fn kernel(&self) -> usize {
        match *self {
            Self::D { kernel } | Self::W { kernel, .. } => kernel,
        }
    }

    /// Weights on `(alpha, beta)` at cut `t`.
    pub fn coefficients(&self, n: usize, t: usize) -> [f64; 2] {
        let (nf, tf) = (n as f64, t as f64);
        match *self {
            Self::D { .. } => {
                let d = nf * (nf - 1.0);
                [tf * (tf - 1.0) / d, -(nf - tf) * (nf - tf - 1.0) / d]
            }
            Self::W { r, .. } => [r * tf / nf, (nf - tf) / nf],
        }
    }
}

const L: u8 = 1;
const M: u8 = 2;
const R: u8 = 4;

/// Injective placements of `masks.len()` labelled indices, index `i` landing in
/// one of the blocks flagged in `masks[i]`.
fn placements(masks: &[u8], sizes: [usize; 3]) -> f64 {
    fn go(masks: &[u8], sizes: [usize; 3], used: [usize; 3]) -> f64 {
        let Some((&first, rest)) = masks.split_first() else {
            return (0..3).map(|b| falling(sizes[b], used[b])).product();
        };
        let mut total = 0.0;
        for b in 0..3 {
            if first & (1 << b) != 0 {
                let mut u = used;
                u[b] += 1;
                if u[b] <= sizes[b] {
                    total += go(rest, sizes, u);
                }
            }
        }
        total
    }
    go(masks, sizes, [0; 3])
}

fn part_mask(part: Part, u: usize, lo: usize) -> u8 {
    match (part, u == lo) {
        (Part::Alpha, true) => L,
        (Part::Beta, true) => M | R,
        (Part::Alpha, false) => L | M,
        (Part::Beta, false) => R,
    }
}

fn pair_count(part: Part, n: usize, u: usize) -> f64 {
    match part {
        Part::Alpha => falling(u, 2),
        Part::Beta => falling(n - u, 2),
    }
}

/// `cov(part_a of kernel a at cut s, part_b of kernel b at cut t)` under the
/// permutation null. Cuts must lie in `[2, n - 2]`.
pub fn part_cov(cache: &MomentCache, a: usize, pa: Part, s: usize, b: usize, pb: Part, t: usize) -> f64 {
    let n = cache.n();
    let (lo, hi) = (s.min(t), s.max(t));
    let sizes = [lo, hi - lo, n - hi];
    let x = part_mask(pa, s, lo);
    let y = part_mask(pb, t, lo);
    let xy = x & y;
    let sc = cache.centered(a, b);
    let same = placements(&[xy, xy], sizes);
    let shared = placements(&[xy, x, y], sizes);
    let disjoint = placements(&[x, x, y, y], sizes);
    let sum_cov = 2.0 * same * sc.a / falling(n, 2) + 4.0 * shared * sc.b / falling(n, 3) + disjoint * sc.c / falling(n, 4);
    sum_cov / (pair_count(pa, n, s) * pair_count(pb, n, t))
}

pub fn process_mean(cache: &MomentCache, p: Process, t: usize) -> f64 {
    let [ca, cb] = p.coefficients(cache.n(), t);
    (ca + cb) * cache.kbar(p.kernel())
}

/// `cov(p(s), q(t))`.
pub fn process_cov(cache: &MomentCache, p: Process, s: usize, q: Process, t: usize) -> f64 {
    let n = cache.n();
    let (cp, cq) = (p.coefficients(n, s), q.coefficients(n, t));
    let parts = [Part::Alpha, Part::Beta];
    let mut total = 0.0;
    for (i, &pi) in parts.iter().enumerate() {
        for (j, &qj) in parts.iter().enumerate() {
            if cp[i] != 0.0 && cq[j] != 0.0 {
                total += cp[i] * cq[j] * part_cov(cache, p.kernel(), pi, s, q.kernel(), qj, t);
            }
        }
    }
    total
}

pub fn process_variance(cache: &MomentCache, p: Process, t: usize) -> f64 {
    process_cov(cache, p, t, p, t)
}

/// Correlation of the standardized process between cuts `s` and `t`.
pub fn cross_time_correlation(cache: &MomentCache, p: Process, s: usize, t: usize) -> f64 {
    process_cov(cache, p, s, p, t) / (process_variance(cache, p, s) * process_variance(cache, p, t)).sqrt()
}

/// Finite-difference slope of the correlation at the diagonal,
/// `1 - rho(t, t + 1)`, or `1 - rho(t - 1, t)` at the last admissible cut.
pub fn finite_sample_slope(cache: &MomentCache, p: Process, t: usize) -> f64 {
    let n = cache.n();
    if t < n - 2 {
        1.0 - cross_time_correlation(cache, p, t, t + 1)
    } else {
        1.0 - cross_time_correlation(cache, p, t - 1, t)
    }
}
