//! Permutation p-values for the scan, fixed-split and single-kernel statistics.

use std::time::Instant;

use rand::seq::SliceRandom;

use super::{Method, TestOutcome};
use crate::error::{Error, Result};
use crate::graphs::GraphSequence;
use crate::kernels::{KernelChoice, KernelMatrix};
use crate::moments::build_cache;
use crate::par;
use crate::rng::{substream, Domain};
use crate::scan::{ScanConfig, ScanPlan};

/// Abort when more than this fraction of replicas produce an undefined statistic.
pub const MAX_DEGENERATE_FRACTION: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PermConfig {
    /// Number of permutations `B`.
    pub permutations: usize,
    pub seed: u64,
    /// Worker threads: `Some(1)` runs sequentially, `None` uses the global pool.
    pub parallel_workers: Option<usize>,
    /// Report `(1 + #{S_b >= S*}) / (1 + B)` instead of the plain average.
    pub add_one: bool,
}

impl Default for PermConfig {
    fn default() -> Self {
        Self {
            permutations: 1000,
            seed: 0,
            parallel_workers: None,
            add_one: false,
        }
    }
}

impl PermConfig {
    pub fn new(permutations: usize, seed: u64) -> Self {
        Self {
            permutations,
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.permutations == 0 {
            return Err(Error::param("number of permutations must be at least 1"));
        }
        if self.parallel_workers == Some(0) {
            return Err(Error::param("parallel_workers must be at least 1"));
        }
        Ok(())
    }
}

/// The `b`-th replica's ordering.
pub(crate) fn replica_order(n: usize, seed: u64, b: usize) -> Vec<usize> {
    let mut rng = substream(seed, Domain::Permutation, b as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Counts replicas at or above `observed`; non-finite replicas count as exceeding.
fn summarize(replicas: &[f64], observed: f64, pcfg: &PermConfig) -> Result<(f64, usize)> {
    let bad = replicas.iter().filter(|s| !s.is_finite()).count();
    if bad > 0 {
        log::warn!("{bad} of {} permutation replicas gave an undefined statistic", replicas.len());
    }
    if bad as f64 > MAX_DEGENERATE_FRACTION * replicas.len() as f64 {
        return Err(Error::Aborted(format!(
            "{bad} of {} permutation replicas were degenerate (limit {:.0}%)",
            replicas.len(),
            MAX_DEGENERATE_FRACTION * 100.0
        )));
    }
    let exceed = replicas.iter().filter(|&&s| !s.is_finite() || s >= observed).count();
    let b = replicas.len() as f64;
    let p = if pcfg.add_one {
        (1.0 + exceed as f64) / (1.0 + b)
    } else {
        exceed as f64 / b
    };
    Ok((p, bad))
}

fn run(
    method: Method,
    plan: &ScanPlan,
    k1: &KernelMatrix,
    k2: &KernelMatrix,
    rows: [&[f64]; 2],
    pcfg: &PermConfig,
    start: Instant,
) -> Result<TestOutcome> {
    let n = plan.n();
    let (s_star, tau_hat) = plan.max_statistic(k1, k2, rows, None);
    let replicas = par::map_indexed_with(pcfg.permutations, pcfg.parallel_workers, |b| {
        let order = replica_order(n, pcfg.seed, b);
        plan.max_statistic(k1, k2, rows, Some(&order)).0
    });
    let (p_value, bad) = summarize(&replicas, s_star, pcfg)?;
    Ok(TestOutcome {
        method,
        p_value,
        tau_hat: Some(tau_hat),
        s_star,
        components: None,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        permutations: Some(pcfg.permutations),
        degenerate_replicas: Some(bad),
    })
}

/// Permutation test of `max_{n0 <= t <= n1} S(t)`. Replicas permute the rows
/// and columns of the given kernels jointly.
pub fn permutation_test(k1: &KernelMatrix, k2: &KernelMatrix, cfg: ScanConfig, pcfg: PermConfig) -> Result<TestOutcome> {
    pcfg.validate()?;
    let start = Instant::now();
    let cache = build_cache(k1, k2)?;
    let plan = ScanPlan::new(&cache, cfg)?;
    run(Method::KapPerm, &plan, k1, k2, [cache.row_sums(0), cache.row_sums(1)], &pcfg, start)
}

/// Permutation test of `S(tau)` at a single known cut.
pub fn fixed_split_test(k1: &KernelMatrix, k2: &KernelMatrix, tau: usize, pcfg: PermConfig) -> Result<TestOutcome> {
    pcfg.validate()?;
    let start = Instant::now();
    let cache = build_cache(k1, k2)?;
    let plan = ScanPlan::new(&cache, ScanConfig::fixed(k1.n(), tau)?)?;
    run(Method::FixedSplit, &plan, k1, k2, [cache.row_sums(0), cache.row_sums(1)], &pcfg, start)
}

/// One-kernel baseline: permutation test of `max (Z_W^2 + Z_D^2)`.
pub fn single_kernel_test(k: &KernelMatrix, cfg: ScanConfig, pcfg: PermConfig) -> Result<TestOutcome> {
    pcfg.validate()?;
    let start = Instant::now();
    let cache = build_cache(k, k)?;
    let plan = ScanPlan::single(&cache, 0, cfg)?;
    run(Method::GkcpPerm, &plan, k, k, [cache.row_sums(0), cache.row_sums(1)], &pcfg, start)
}

/// Validation variant of [`permutation_test`]: every replica reorders the
/// graph sequence itself and recomputes both kernels from scratch.
pub fn permutation_test_strict(
    seq: &GraphSequence,
    kernels: [&KernelChoice; 2],
    cfg: ScanConfig,
    pcfg: PermConfig,
) -> Result<TestOutcome> {
    pcfg.validate()?;
    let start = Instant::now();
    let n = seq.len();
    let statistic = |order: Option<&[usize]>| -> Result<(f64, usize)> {
        let (k1, k2) = match order {
            None => (kernels[0].build(seq)?, kernels[1].build(seq)?),
            Some(o) => {
                let permuted = seq.permuted(o)?;
                let rebuild = |c: &KernelChoice| match c {
                    KernelChoice::External(k) => Ok(k.permuted(o)),
                    _ => c.build(&permuted),
                };
                (rebuild(kernels[0])?, rebuild(kernels[1])?)
            }
        };
        let cache = build_cache(&k1, &k2)?;
        let plan = ScanPlan::new(&cache, cfg)?;
        Ok(plan.max_statistic(&k1, &k2, [cache.row_sums(0), cache.row_sums(1)], None))
    };
    let (s_star, tau_hat) = statistic(None)?;
    let replicas = par::map_indexed_with(pcfg.permutations, pcfg.parallel_workers, |b| {
        let order = replica_order(n, pcfg.seed, b);
        match statistic(Some(&order)) {
            Ok((s, _)) => s,
            Err(e) => {
                log::warn!("replica {b}: {e}");
                f64::INFINITY
            }
        }
    });
    let (p_value, bad) = summarize(&replicas, s_star, &pcfg)?;
    Ok(TestOutcome {
        method: Method::KapPerm,
        p_value,
        tau_hat: Some(tau_hat),
        s_star,
        components: None,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        permutations: Some(pcfg.permutations),
        degenerate_replicas: Some(bad),
    })
}
