//! Multiple change points by binary segmentation.
//!
//! Positions use half-open 0-based segments `[start, end)`. A change point
//! `tau` means observations `0..tau` precede the change, i.e. `tau` is the
//! 1-based index of the last pre-change observation.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::GraphSequence;
use crate::inference::{fast_test, permutation_test, FastConfig, PermConfig, TestOutcome};
use crate::kernels::{KernelChoice, KernelMatrix};
use crate::par;
use crate::rng::{derive_seed, Domain};
use crate::scan::ScanConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Engine {
    KapPerm,
    KapfAnalytic,
}

#[derive(Clone, Debug)]
pub struct SegmentationConfig {
    pub alpha: f64,
    pub min_separation: usize,
    pub min_segment: usize,
    pub engine: Engine,
    pub n0_frac: f64,
    pub n1_frac: f64,
    /// Permutation settings; the seed is re-derived for every segment.
    pub perm: PermConfig,
    pub r1: f64,
    pub r2: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self::with_min_separation(6)
    }
}

impl SegmentationConfig {
    /// Defaults with `min_segment = max(2 min_separation, 20)`.
    pub fn with_min_separation(min_separation: usize) -> Self {
        Self {
            alpha: 0.05,
            min_separation,
            min_segment: (2 * min_separation).max(20),
            engine: Engine::KapPerm,
            n0_frac: 0.05,
            n1_frac: 0.95,
            perm: PermConfig::default(),
            r1: FastConfig::DEFAULT_R1,
            r2: FastConfig::DEFAULT_R2,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.min_separation < 1 {
            return Err(Error::param("min_separation must be at least 1"));
        }
        if self.min_segment < 4 {
            return Err(Error::param("min_segment must be at least 4"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChangePoint {
    pub start: usize,
    pub end: usize,
    pub tau: usize,
    pub p_value: f64,
    #[serde(skip)]
    pub s_star: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NodeStatus {
    Split { tau: usize, p_value: f64 },
    Accepted { p_value: f64 },
    TooShort,
    Skipped { reason: String },
}

/// One tested (or skipped) segment and its sub-segments.
#[derive(Clone, Debug, Serialize)]
pub struct SegmentNode {
    pub start: usize,
    pub end: usize,
    pub status: NodeStatus,
    pub children: Vec<SegmentNode>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SegmentationResult {
    /// Sorted by `tau`, after enforcing the minimum separation.
    pub change_points: Vec<ChangePoint>,
    pub trace: SegmentNode,
}

impl SegmentationResult {
    pub fn taus(&self) -> Vec<usize> {
        self.change_points.iter().map(|c| c.tau).collect()
    }

    /// JSON list of `{start, end, tau, p_value}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.change_points).expect("change points serialize")
    }

    pub fn render_trace(&self) -> String {
        fn go(node: &SegmentNode, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            let _ = match &node.status {
                NodeStatus::Split { tau, p_value } => {
                    writeln!(out, "{pad}[{}, {}) split at {tau} (p = {p_value:.4})", node.start, node.end)
                }
                NodeStatus::Accepted { p_value } => writeln!(out, "{pad}[{}, {}) no change (p = {p_value:.4})", node.start, node.end),
                NodeStatus::TooShort => writeln!(out, "{pad}[{}, {}) too short", node.start, node.end),
                NodeStatus::Skipped { reason } => writeln!(out, "{pad}[{}, {}) skipped: {reason}", node.start, node.end),
            };
            for c in &node.children {
                go(c, depth + 1, out);
            }
        }
        let mut out = String::new();
        go(&self.trace, 0, &mut out);
        out
    }
}

/// Source of the observations: a graph sequence, or precomputed external kernels.
enum Source<'a> {
    Graphs(&'a GraphSequence, [&'a KernelChoice; 2]),
    Kernels(&'a KernelMatrix, &'a KernelMatrix),
}

impl Source<'_> {
    fn kernels(&self, start: usize, end: usize) -> Result<(KernelMatrix, KernelMatrix)> {
        match self {
            Source::Graphs(seq, [a, b]) => Ok((a.build_range(seq, start..end)?, b.build_range(seq, start..end)?)),
            Source::Kernels(k1, k2) => Ok((k1.submatrix(start..end)?, k2.submatrix(start..end)?)),
        }
    }
}

fn test_segment(src: &Source<'_>, start: usize, end: usize, cfg: &SegmentationConfig) -> Result<TestOutcome> {
    let (k1, k2) = src.kernels(start, end)?;
    let scan = ScanConfig::from_fractions(end - start, cfg.n0_frac, cfg.n1_frac)?;
    match cfg.engine {
        Engine::KapPerm => {
            let index = ((start as u64) << 32) | end as u64;
            let perm = PermConfig {
                seed: derive_seed(cfg.perm.seed, Domain::Segment, index),
                ..cfg.perm
            };
            permutation_test(&k1, &k2, scan, perm)
        }
        Engine::KapfAnalytic => fast_test(&k1, &k2, FastConfig::new(cfg.r1, cfg.r2, scan)?),
    }
}

fn segment(src: &Source<'_>, start: usize, end: usize, cfg: &SegmentationConfig, found: &mut Vec<ChangePoint>) -> SegmentNode {
    let leaf = |status| SegmentNode {
        start,
        end,
        status,
        children: Vec::new(),
    };
    if end - start < cfg.min_segment {
        return leaf(NodeStatus::TooShort);
    }
    let outcome = match test_segment(src, start, end, cfg) {
        Ok(o) => o,
        Err(e) => {
            log::warn!("segment [{start}, {end}) skipped: {e}");
            return leaf(NodeStatus::Skipped { reason: e.to_string() });
        }
    };
    let (p, local) = (outcome.p_value, outcome.tau_hat.expect("scan tests report a location"));
    if p > cfg.alpha {
        return leaf(NodeStatus::Accepted { p_value: p });
    }
    let tau = start + local;
    found.push(ChangePoint {
        start,
        end,
        tau,
        p_value: p,
        s_star: outcome.s_star,
    });
    let ((left, mut lf), (right, mut rf)) = par::join(
        || {
            let mut v = Vec::new();
            (segment(src, start, tau, cfg, &mut v), v)
        },
        || {
            let mut v = Vec::new();
            (segment(src, tau, end, cfg, &mut v), v)
        },
    );
    found.append(&mut lf);
    found.append(&mut rf);
    SegmentNode {
        start,
        end,
        status: NodeStatus::Split { tau, p_value: p },
        children: vec![left, right],
    }
}

/// Drops, among neighbours closer than `min_sep`, the one with the smaller
/// scan maximum, until all gaps are at least `min_sep`.
fn enforce_separation(mut cps: Vec<ChangePoint>, min_sep: usize) -> Vec<ChangePoint> {
    cps.sort_by_key(|c| c.tau);
    loop {
        let worst = cps
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].tau - w[0].tau < min_sep)
            .map(|(i, w)| if w[0].s_star < w[1].s_star { i } else { i + 1 })
            .min_by(|&a, &b| cps[a].s_star.total_cmp(&cps[b].s_star));
        match worst {
            Some(i) => {
                cps.remove(i);
            }
            None => return cps,
        }
    }
}

fn run(src: Source<'_>, n: usize, cfg: &SegmentationConfig) -> Result<SegmentationResult> {
    cfg.validate()?;
    if n < cfg.min_segment {
        return Err(Error::param(format!("sequence of length {n} is shorter than min_segment {}", cfg.min_segment)));
    }
    let mut found = Vec::new();
    let trace = segment(&src, 0, n, cfg, &mut found);
    Ok(SegmentationResult {
        change_points: enforce_separation(found, cfg.min_separation),
        trace,
    })
}

/// Binary segmentation with kernels recomputed on every segment.
pub fn binary_segmentation(seq: &GraphSequence, kernels: [&KernelChoice; 2], cfg: &SegmentationConfig) -> Result<SegmentationResult> {
    run(Source::Graphs(seq, kernels), seq.len(), cfg)
}

/// Binary segmentation on precomputed kernels (segments use sub-matrices).
pub fn binary_segmentation_kernels(k1: &KernelMatrix, k2: &KernelMatrix, cfg: &SegmentationConfig) -> Result<SegmentationResult> {
    if k1.n() != k2.n() {
        return Err(Error::param("kernel sizes differ"));
    }
    run(Source::Kernels(k1, k2), k1.n(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp(tau: usize, s: f64) -> ChangePoint {
        ChangePoint {
            start: 0,
            end: 100,
            tau,
            p_value: 0.0,
            s_star: s,
        }
    }

    #[test]
    fn separation_keeps_stronger_neighbour() {
        let kept = enforce_separation(vec![cp(50, 9.0), cp(20, 3.0), cp(53, 4.0), cp(80, 1.0)], 6);
        assert_eq!(kept.iter().map(|c| c.tau).collect::<Vec<_>>(), vec![20, 50, 80]);
        let kept = enforce_separation(vec![cp(10, 1.0), cp(14, 5.0), cp(18, 2.0)], 6);
        assert_eq!(kept.iter().map(|c| c.tau).collect::<Vec<_>>(), vec![14]);
    }

    #[test]
    fn config_validation() {
        let mut c = SegmentationConfig::default();
        assert_eq!(c.min_segment, 20);
        assert_eq!(SegmentationConfig::with_min_separation(15).min_segment, 30);
        c.alpha = 1.0;
        assert!(c.validate().is_err());
    }
}
