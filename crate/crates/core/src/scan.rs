//! The two-kernel scan statistic `S(t)` and its maximum over a cut window.
//!
//! `S(t)` is the Mahalanobis distance of `(alpha_1, beta_1, alpha_2, beta_2)`
//! from its permutation mean. Everything about its covariance is invariant
//! under reordering the observations, so a [`ScanPlan`] computes, once, the
//! four orthogonal unit directions per cut; `S(t)` of any reordering is then
//! the squared norm of four dot products.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::error::{DegeneracyKind, Error, Result};
use crate::kernels::KernelMatrix;
use crate::moments::{time_moments, MomentCache, TimeMoments};
use crate::numeric::CompensatedSum;

/// Relative tolerance on `1 - cov^2 / (var var)` below which two components count as collinear.
pub const COLLINEAR_TOLERANCE: f64 = 1e-10;
/// Variances below this multiple of the mean squared kernel entry count as zero.
pub const VARIANCE_FLOOR: f64 = 1e-16;

/// Window of admissible cuts `n0 <= t <= n1`; `t` observations precede the cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ScanConfig {
    pub n0: usize,
    pub n1: usize,
}

impl ScanConfig {
    pub fn new(n: usize, n0: usize, n1: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::param(format!("need at least 4 observations, got {n}")));
        }
        if n0 < 2 || n1 > n - 2 || n0 > n1 {
            return Err(Error::param(format!(
                "cut window [{n0}, {n1}] must satisfy 2 <= n0 <= n1 <= n - 2 = {}",
                n - 2
            )));
        }
        Ok(Self { n0, n1 })
    }

    /// `n0 = ceil(f0 n)`, `n1 = floor(f1 n)`, clamped into `[2, n - 2]`.
    pub fn from_fractions(n: usize, f0: f64, f1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&f0) || !(0.0..=1.0).contains(&f1) || f0 > f1 {
            return Err(Error::param(format!("cut fractions ({f0}, {f1}) must satisfy 0 <= f0 <= f1 <= 1")));
        }
        if n < 4 {
            return Err(Error::param(format!("need at least 4 observations, got {n}")));
        }
        let n0 = ((f0 * n as f64).ceil() as usize).max(2);
        let n1 = ((f1 * n as f64).floor() as usize).min(n - 2);
        Self::new(n, n0.min(n1), n1)
    }

    /// The usual 5% / 95% trimming.
    pub fn default_for(n: usize) -> Result<Self> {
        Self::from_fractions(n, 0.05, 0.95)
    }

    /// A single fixed cut.
    pub fn fixed(n: usize, t: usize) -> Result<Self> {
        Self::new(n, t, t)
    }

    pub fn cuts(&self) -> std::ops::RangeInclusive<usize> {
        self.n0..=self.n1
    }
}

/// Running sums `R1(t)` (pairs inside the first `t` observations) and `R2(t)`
/// (pairs inside the rest), over ordered pairs, for `t = 0..=n`.
#[derive(Clone, Debug)]
pub struct RawSums {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

/// `R1`/`R2` of the sequence reordered by `order` (identity when `None`), in `O(n^2)`.
pub fn raw_sums(k: &KernelMatrix, row_sums: &[f64], order: Option<&[usize]>) -> RawSums {
    let n = k.n();
    let idx = |p: usize| order.map_or(p, |o| o[p]);
    let mut r1 = vec![0.0; n + 1];
    let mut r2 = vec![0.0; n + 1];
    let mut before = vec![0.0; n];
    for p in 0..n {
        let row = k.row(idx(p));
        let a: CompensatedSum = match order {
            Some(o) => o[..p].iter().map(|&q| row[q]).collect(),
            None => row[..p].iter().copied().collect(),
        };
        before[p] = a.value();
        r1[p + 1] = r1[p] + 2.0 * before[p];
    }
    for p in (0..n).rev() {
        r2[p] = r2[p + 1] + 2.0 * (row_sums[idx(p)] - before[p]);
    }
    RawSums { r1, r2 }
}

/// Names of the four orthogonal components of `S(t)`.
pub const COMPONENTS: [&str; 4] = ["W_diff", "D_diff", "W_sum", "D_sum"];

/// Per-cut unit directions on the centred vector
/// `(alpha_1 - kbar_1, beta_1 - kbar_1, alpha_2 - kbar_2, beta_2 - kbar_2)`.
#[derive(Clone, Debug)]
pub struct ScanPlan {
    n: usize,
    config: ScanConfig,
    kbar: [f64; 2],
    used: [bool; 2],
    directions: Vec<Vec<[f64; 4]>>,
}

fn sigma_matrix(m: &TimeMoments) -> Matrix4<f64> {
    let mut s = Matrix4::zeros();
    for a in 0..2 {
        for b in 0..2 {
            s[(2 * a, 2 * b)] = m.cov_alpha[a][b];
            s[(2 * a + 1, 2 * b + 1)] = m.cov_beta[a][b];
            s[(2 * a, 2 * b + 1)] = m.cov_alpha_beta[a][b];
            s[(2 * a + 1, 2 * b)] = m.cov_alpha_beta[b][a];
        }
    }
    s
}

/// Weights on `(alpha, beta)` of `W` and `D` at cut `t`.
fn w_d_weights(n: usize, t: usize) -> ([f64; 2], [f64; 2]) {
    let (nf, tf) = (n as f64, t as f64);
    let nn = nf * (nf - 1.0);
    (
        [tf / nf, (nf - tf) / nf],
        [tf * (tf - 1.0) / nn, -(nf - tf) * (nf - tf - 1.0) / nn],
    )
}

fn embed(first: [f64; 2], second: [f64; 2], c1: f64, c2: f64) -> Vector4<f64> {
    Vector4::new(c1 * first[0], c1 * first[1], c2 * second[0], c2 * second[1])
}

struct Checker<'a> {
    sigma: &'a Matrix4<f64>,
    floor: [f64; 2],
    t: usize,
}

impl Checker<'_> {
    fn var(&self, v: &Vector4<f64>) -> f64 {
        (v.transpose() * self.sigma * v)[(0, 0)]
    }

    fn cov(&self, u: &Vector4<f64>, v: &Vector4<f64>) -> f64 {
        (u.transpose() * self.sigma * v)[(0, 0)]
    }

    fn degenerate(&self, component: &'static str, kind: DegeneracyKind) -> Error {
        Error::Degenerate {
            t: self.t,
            component,
            kind,
        }
    }

    fn unit(&self, v: Vector4<f64>, floor: f64, component: &'static str) -> Result<[f64; 4]> {
        let var = self.var(&v);
        if !(var > floor) {
            return Err(self.degenerate(component, DegeneracyKind::ZeroVariance));
        }
        let u = v / var.sqrt();
        Ok([u[0], u[1], u[2], u[3]])
    }

    /// Difference and decorrelated sum of one process pair (`W` or `D`).
    fn pair(
        &self,
        x1: Vector4<f64>,
        x2: Vector4<f64>,
        names: [&'static str; 2],
        collinear: DegeneracyKind,
        sum_kind: DegeneracyKind,
    ) -> Result<[[f64; 4]; 2]> {
        let (v1, v2, c) = (self.var(&x1), self.var(&x2), self.cov(&x1, &x2));
        let both = self.floor[0].max(self.floor[1]);
        if !(self.var(&(x1 + x2)) > both) {
            return Err(self.degenerate(names[1], sum_kind));
        }
        if !(v1 > self.floor[0] && v2 > self.floor[1]) || 1.0 - c * c / (v1 * v2) <= COLLINEAR_TOLERANCE {
            return Err(self.degenerate(names[0], collinear));
        }
        let diff = x1 - x2;
        let sum = if (v1 - c).abs() > 1e-12 * (v1 + v2 + 2.0 * c) {
            x1 * ((v2 - c) / (v1 - c)) + x2
        } else {
            x1 + x2 * ((v1 - c) / (v2 - c))
        };
        Ok([self.unit(diff, both, names[0])?, self.unit(sum, both, names[1])?])
    }
}

fn floors(cache: &MomentCache) -> [f64; 2] {
    [0, 1].map(|x| VARIANCE_FLOOR * cache.mean_square(x).max(f64::MIN_POSITIVE))
}

impl ScanPlan {
    /// Two-kernel plan. Fails with [`Error::Degenerate`] at the first cut where
    /// `S(t)` is undefined.
    pub fn new(cache: &MomentCache, config: ScanConfig) -> Result<Self> {
        let n = cache.n();
        ScanConfig::new(n, config.n0, config.n1)?;
        let floor = floors(cache);
        let directions = config
            .cuts()
            .map(|t| {
                let sigma = sigma_matrix(&time_moments(cache, t)?);
                let check = Checker { sigma: &sigma, floor, t };
                let (w, d) = w_d_weights(n, t);
                let zero = [0.0; 2];
                let [wd, ws] = check.pair(
                    embed(w, zero, 1.0, 0.0),
                    embed(zero, w, 0.0, 1.0),
                    [COMPONENTS[0], COMPONENTS[2]],
                    DegeneracyKind::WCollinear,
                    DegeneracyKind::WSumVariance,
                )?;
                let [dd, ds] = check.pair(
                    embed(d, zero, 1.0, 0.0),
                    embed(zero, d, 0.0, 1.0),
                    [COMPONENTS[1], COMPONENTS[3]],
                    DegeneracyKind::DCollinear,
                    DegeneracyKind::DSumVariance,
                )?;
                Ok(vec![wd, dd, ws, ds])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            config,
            kbar: [cache.kbar(0), cache.kbar(1)],
            used: [true, true],
            directions,
        })
    }

    /// Single-kernel plan `Z_W^2 + Z_D^2` for kernel `x` (0 or 1).
    pub fn single(cache: &MomentCache, x: usize, config: ScanConfig) -> Result<Self> {
        let n = cache.n();
        ScanConfig::new(n, config.n0, config.n1)?;
        let floor = floors(cache);
        let directions = config
            .cuts()
            .map(|t| {
                let sigma = sigma_matrix(&time_moments(cache, t)?);
                let check = Checker { sigma: &sigma, floor, t };
                let (w, d) = w_d_weights(n, t);
                let (c1, c2) = if x == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
                Ok(vec![
                    check.unit(embed(w, w, c1, c2), floor[x], "W")?,
                    check.unit(embed(d, d, c1, c2), floor[x], "D")?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        let mut used = [false; 2];
        used[x] = true;
        Ok(Self {
            n,
            config,
            kbar: [cache.kbar(0), cache.kbar(1)],
            used,
            directions,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn config(&self) -> ScanConfig {
        self.config
    }

    /// Number of orthogonal components per cut (4, or 2 for a single kernel).
    pub fn n_components(&self) -> usize {
        self.directions.first().map_or(0, Vec::len)
    }

    /// Unit directions at cut `t`.
    pub fn directions(&self, t: usize) -> &[[f64; 4]] {
        &self.directions[t - self.config.n0]
    }

    fn centred(&self, sums: &[Option<RawSums>; 2], t: usize) -> [f64; 4] {
        let n = self.n;
        let pa = (t * (t - 1)) as f64;
        let pb = ((n - t) * (n - t - 1)) as f64;
        let mut v = [0.0; 4];
        for x in 0..2 {
            if let Some(s) = &sums[x] {
                v[2 * x] = s.r1[t] / pa - self.kbar[x];
                v[2 * x + 1] = s.r2[t] / pb - self.kbar[x];
            }
        }
        v
    }

    fn sums(&self, k1: &KernelMatrix, k2: &KernelMatrix, rows: [&[f64]; 2], order: Option<&[usize]>) -> [Option<RawSums>; 2] {
        let ks = [k1, k2];
        [0, 1].map(|x| self.used[x].then(|| raw_sums(ks[x], rows[x], order)))
    }

    /// Full profile of the sequence reordered by `order`.
    pub fn profile(&self, k1: &KernelMatrix, k2: &KernelMatrix, rows: [&[f64]; 2], order: Option<&[usize]>) -> ScanProfile {
        let sums = self.sums(k1, k2, rows, order);
        let points = self
            .config
            .cuts()
            .map(|t| {
                let v = self.centred(&sums, t);
                let z: Vec<f64> = self.directions(t).iter().map(|u| dot(u, &v)).collect();
                ProfilePoint {
                    t,
                    s: z.iter().map(|x| x * x).sum(),
                    z,
                }
            })
            .collect();
        ScanProfile::from_points(points, self.n_components())
    }

    /// `(max S(t), argmax)` of the reordered sequence without keeping the profile.
    pub fn max_statistic(&self, k1: &KernelMatrix, k2: &KernelMatrix, rows: [&[f64]; 2], order: Option<&[usize]>) -> (f64, usize) {
        let sums = self.sums(k1, k2, rows, order);
        let mut best = (f64::NEG_INFINITY, self.config.n0);
        for t in self.config.cuts() {
            let v = self.centred(&sums, t);
            let s: f64 = self.directions(t).iter().map(|u| dot(u, &v).powi(2)).sum();
            if s.is_nan() {
                return (s, t);
            }
            if s > best.0 {
                best = (s, t);
            }
        }
        best
    }
}

#[inline]
fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfilePoint {
    pub t: usize,
    pub s: f64,
    /// Standardized components in [`COMPONENTS`] order (or `W`, `D` for one kernel).
    pub z: Vec<f64>,
}

/// `S(t)` over the cut window together with its maximum.
#[derive(Clone, Debug, Serialize)]
pub struct ScanProfile {
    pub points: Vec<ProfilePoint>,
    pub s_star: f64,
    /// Smallest maximizing cut.
    pub tau_hat: usize,
    #[serde(skip)]
    n_components: usize,
}

impl ScanProfile {
    fn from_points(points: Vec<ProfilePoint>, n_components: usize) -> Self {
        let mut best = 0;
        for (i, p) in points.iter().enumerate() {
            if p.s > points[best].s {
                best = i;
            }
        }
        Self {
            s_star: points[best].s,
            tau_hat: points[best].t,
            points,
            n_components,
        }
    }

    /// `S(t)` at cut `t`, if inside the window.
    pub fn at(&self, t: usize) -> Option<f64> {
        let first = self.points.first()?.t;
        self.points.get(t.checked_sub(first)?).map(|p| p.s)
    }

    pub fn to_csv(&self) -> String {
        let names: &[&str] = if self.n_components == 4 { &COMPONENTS } else { &["W", "D"] };
        let mut out = String::from("t,S");
        for name in names {
            out.push_str(",Z_");
            out.push_str(name);
        }
        out.push('\n');
        for p in &self.points {
            let _ = write!(out, "{},{}", p.t, p.s);
            for z in &p.z {
                let _ = write!(out, ",{z}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Convenience: build the cache and plan and scan the sequence in its observed order.
pub fn scan_statistic(k1: &KernelMatrix, k2: &KernelMatrix, config: ScanConfig) -> Result<ScanProfile> {
    let cache = crate::moments::build_cache(k1, k2)?;
    let plan = ScanPlan::new(&cache, config)?;
    Ok(plan.profile(k1, k2, [cache.row_sums(0), cache.row_sums(1)], None))
}

/// `S(t)` evaluated the slow way, `(a - E a)^T Sigma^{-1} (a - E a)` with an
/// explicit 4x4 inverse, for every cut in the window.
pub fn scan_statistic_direct(cache: &MomentCache, k1: &KernelMatrix, k2: &KernelMatrix, config: ScanConfig) -> Result<Vec<f64>> {
    let n = cache.n();
    let sums = [raw_sums(k1, cache.row_sums(0), None), raw_sums(k2, cache.row_sums(1), None)];
    config
        .cuts()
        .map(|t| {
            let sigma = sigma_matrix(&time_moments(cache, t)?);
            let inv = sigma.try_inverse().ok_or(Error::Degenerate {
                t,
                component: "Sigma",
                kind: DegeneracyKind::ZeroVariance,
            })?;
            let pa = (t * (t - 1)) as f64;
            let pb = ((n - t) * (n - t - 1)) as f64;
            let v = Vector4::new(
                sums[0].r1[t] / pa - cache.kbar(0),
                sums[0].r2[t] / pb - cache.kbar(0),
                sums[1].r1[t] / pa - cache.kbar(1),
                sums[1].r2[t] / pb - cache.kbar(1),
            );
            Ok((v.transpose() * inv * v)[(0, 0)])
        })
        .collect()
}

/// `S(tau)` at a single prespecified cut.
pub fn fixed_split_statistic(k1: &KernelMatrix, k2: &KernelMatrix, tau: usize) -> Result<f64> {
    let profile = scan_statistic(k1, k2, ScanConfig::fixed(k1.n(), tau)?)?;
    Ok(profile.s_star)
}
