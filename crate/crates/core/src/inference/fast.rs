//! Fast analytic test: six scan maxima combined by Bonferroni.

use std::time::Instant;

use super::tail::{process_name, ProcessTail};
use super::{ComponentResult, Method, TestOutcome};
use crate::error::{DegeneracyKind, Error, Result};
use crate::kernels::KernelMatrix;
use crate::moments::{build_cache, process_variance, MomentCache, Process};
use crate::scan::{raw_sums, RawSums, ScanConfig, ScanPlan, VARIANCE_FLOOR};

/// Component order used in results: `D1, D2, W1(r1), W1(r2), W2(r1), W2(r2)`.
pub const FAST_COMPONENTS: [&str; 6] = ["D1", "D2", "W1_r1", "W1_r2", "W2_r1", "W2_r2"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FastConfig {
    pub r1: f64,
    pub r2: f64,
    pub scan: ScanConfig,
    /// Use the two-sided factor `2 b phi(b)` for the `W_r` tails as well.
    pub w_two_sided: bool,
}

impl FastConfig {
    pub const DEFAULT_R1: f64 = 0.5;
    pub const DEFAULT_R2: f64 = 2.0;

    pub fn new(r1: f64, r2: f64, scan: ScanConfig) -> Result<Self> {
        for r in [r1, r2] {
            if r == 1.0 || !(r > 0.0) || !r.is_finite() {
                return Err(Error::param(format!("weights r must be positive and differ from 1, got {r}")));
            }
        }
        Ok(Self {
            r1,
            r2,
            scan,
            w_two_sided: false,
        })
    }

    pub fn default_for(n: usize) -> Result<Self> {
        Self::new(Self::DEFAULT_R1, Self::DEFAULT_R2, ScanConfig::default_for(n)?)
    }

    pub fn processes(&self) -> [Process; 6] {
        [
            Process::D { kernel: 0 },
            Process::D { kernel: 1 },
            Process::W { kernel: 0, r: self.r1 },
            Process::W { kernel: 0, r: self.r2 },
            Process::W { kernel: 1, r: self.r1 },
            Process::W { kernel: 1, r: self.r2 },
        ]
    }
}

/// Everything about the six processes that does not depend on the ordering
/// of the observations: standardizing directions and tail approximations.
#[derive(Clone, Debug)]
pub struct FastPlan {
    config: FastConfig,
    n: usize,
    kbar: [f64; 2],
    processes: [Process; 6],
    /// Per cut: for each process, weights on `(alpha - kbar, beta - kbar)` of its kernel.
    directions: Vec<[[f64; 2]; 6]>,
    tails: Vec<ProcessTail>,
}

impl FastPlan {
    pub fn new(cache: &MomentCache, config: FastConfig) -> Result<Self> {
        let n = cache.n();
        let cfg = ScanConfig::new(n, config.scan.n0, config.scan.n1)?;
        let processes = config.processes();
        let directions = cfg
            .cuts()
            .map(|t| {
                let mut d = [[0.0; 2]; 6];
                for (k, &p) in processes.iter().enumerate() {
                    let var = process_variance(cache, p, t);
                    let floor = VARIANCE_FLOOR * cache.mean_square(p.kernel()).max(f64::MIN_POSITIVE);
                    if !(var > floor) {
                        return Err(Error::Degenerate {
                            t,
                            component: FAST_COMPONENTS[k],
                            kind: DegeneracyKind::ZeroVariance,
                        });
                    }
                    let sd = var.sqrt();
                    let c = p.coefficients(n, t);
                    d[k] = [c[0] / sd, c[1] / sd];
                }
                Ok(d)
            })
            .collect::<Result<Vec<_>>>()?;
        let tails = processes
            .iter()
            .map(|&p| match p {
                Process::W { .. } if config.w_two_sided => ProcessTail::with_sides(cache, p, cfg, 2.0),
                _ => ProcessTail::new(cache, p, cfg),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            n,
            kbar: [cache.kbar(0), cache.kbar(1)],
            processes,
            directions,
            tails,
        })
    }

    pub fn config(&self) -> FastConfig {
        self.config
    }

    pub fn tail(&self, k: usize) -> &ProcessTail {
        &self.tails[k]
    }

    /// Standardized value of every process at every cut, from raw sums.
    pub fn z_values(&self, sums: [&RawSums; 2]) -> Vec<[f64; 6]> {
        let n = self.n;
        self.config
            .scan
            .cuts()
            .zip(&self.directions)
            .map(|(t, dir)| {
                let pa = (t * (t - 1)) as f64;
                let pb = ((n - t) * (n - t - 1)) as f64;
                let dev = [0, 1].map(|x| [sums[x].r1[t] / pa - self.kbar[x], sums[x].r2[t] / pb - self.kbar[x]]);
                let mut z = [0.0; 6];
                for k in 0..6 {
                    let x = self.processes[k].kernel();
                    z[k] = dir[k][0] * dev[x][0] + dir[k][1] * dev[x][1];
                }
                z
            })
            .collect()
    }

    /// `(max, argmax)` per component: `max |Z|` for `D`, `max Z` for `W_r`.
    pub fn maxima(&self, k1: &KernelMatrix, k2: &KernelMatrix, rows: [&[f64]; 2], order: Option<&[usize]>) -> [(f64, usize); 6] {
        let sums = [raw_sums(k1, rows[0], order), raw_sums(k2, rows[1], order)];
        let mut best = [(f64::NEG_INFINITY, self.config.scan.n0); 6];
        for (t, z) in self.config.scan.cuts().zip(self.z_values([&sums[0], &sums[1]])) {
            for k in 0..6 {
                let v = if k < 2 { z[k].abs() } else { z[k] };
                if v > best[k].0 {
                    best[k] = (v, t);
                }
            }
        }
        best
    }

    pub fn p_values(&self, maxima: &[(f64, usize); 6]) -> [f64; 6] {
        std::array::from_fn(|k| self.tails[k].p_value(maxima[k].0))
    }
}

/// Bonferroni: `min(1, 6 min_k p_k)`.
pub fn bonferroni(p: &[f64; 6]) -> f64 {
    (6.0 * p.iter().copied().fold(f64::INFINITY, f64::min)).min(1.0)
}

/// Fast test. The location estimate is still `argmax S(t)`, so `S(t)` must be
/// well defined as well.
pub fn fast_test(k1: &KernelMatrix, k2: &KernelMatrix, fcfg: FastConfig) -> Result<TestOutcome> {
    let start = Instant::now();
    let cache = build_cache(k1, k2)?;
    let plan = FastPlan::new(&cache, fcfg)?;
    let rows = [cache.row_sums(0), cache.row_sums(1)];
    let maxima = plan.maxima(k1, k2, rows, None);
    let p = plan.p_values(&maxima);
    let scan = ScanPlan::new(&cache, fcfg.scan)?;
    let (s_star, tau_hat) = scan.max_statistic(k1, k2, rows, None);
    let components = (0..6)
        .map(|k| ComponentResult {
            name: component_label(k, &fcfg),
            max: maxima[k].0,
            t: maxima[k].1,
            p_value: p[k],
        })
        .collect();
    Ok(TestOutcome {
        method: Method::KapfAnalytic,
        p_value: bonferroni(&p),
        tau_hat: Some(tau_hat),
        s_star,
        components: Some(components),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        permutations: None,
        degenerate_replicas: None,
    })
}

fn component_label(k: usize, cfg: &FastConfig) -> String {
    let p = cfg.processes()[k];
    match p {
        Process::D { .. } => process_name(p).to_string(),
        Process::W { r, .. } => format!("{}(r={r})", process_name(p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bonferroni_caps_at_one() {
        assert_eq!(bonferroni(&[0.2, 0.5, 1.0, 0.9, 0.3, 0.17]), 1.0);
        assert!((bonferroni(&[0.01, 0.5, 1.0, 0.9, 0.3, 0.17]) - 0.06).abs() < 1e-15);
    }

    #[test]
    fn r_equal_one_rejected() {
        let s = ScanConfig::default_for(50).unwrap();
        assert!(FastConfig::new(1.0, 2.0, s).is_err());
        assert!(FastConfig::new(0.5, 1.0, s).is_err());
        assert!(FastConfig::new(0.5, 2.0, s).is_ok());
    }
}
