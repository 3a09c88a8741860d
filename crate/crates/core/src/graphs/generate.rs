//! Random network sequences with an optional single change point.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ergm::{ergm_gibbs, ERGM_BURN_IN_FACTOR};
use super::{GraphSequence, GraphSnapshot};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{substream, Domain};

/// Named experimental setting; decides which [`Model`] variant is allowed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Er,
    Sbm,
    SparseSbm,
    DcsbmDegree,
    DcsbmHub,
    DcsbmBlock,
    Rgg,
    Ergm,
}

/// Parameters of one generating distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Model {
    Er { p: f64 },
    /// Block connectivity matrix; communities are contiguous balanced blocks.
    Sbm { block: Vec<Vec<f64>> },
    /// `P(A_ij = 1) = theta_i theta_j block[z_i][z_j]`, clamped to `[0, 1]`.
    Dcsbm { theta: Vec<f64>, block: Vec<Vec<f64>> },
    /// Nodes uniform on the unit square, adjacent iff distance <= radius.
    Rgg { radius: f64 },
    Ergm { edge: f64, triangle: f64 },
}

impl Model {
    fn same_variant(&self, other: &Model) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }

    fn validate(&self, n_nodes: usize) -> Result<()> {
        let check_block = |block: &Vec<Vec<f64>>| -> Result<()> {
            let k = block.len();
            if k == 0 || k > n_nodes {
                return Err(Error::param(format!("block matrix with {k} communities for {n_nodes} nodes")));
            }
            for (a, row) in block.iter().enumerate() {
                if row.len() != k {
                    return Err(Error::param("block matrix must be square"));
                }
                for (b, &p) in row.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::param(format!("block probability {p} outside [0,1]")));
                    }
                    if p != block[b][a] {
                        return Err(Error::param("block matrix must be symmetric"));
                    }
                }
            }
            Ok(())
        };
        match self {
            Model::Er { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::param(format!("edge probability {p} outside [0,1]")));
                }
            }
            Model::Sbm { block } => check_block(block)?,
            Model::Dcsbm { theta, block } => {
                check_block(block)?;
                if theta.len() != n_nodes {
                    return Err(Error::param(format!("theta has {} entries for {n_nodes} nodes", theta.len())));
                }
                if let Some(bad) = theta.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
                    return Err(Error::param(format!("degree parameter {bad} must be positive")));
                }
            }
            Model::Rgg { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::param(format!("radius {radius} must be positive")));
                }
            }
            Model::Ergm { edge, triangle } => {
                if !(edge.is_finite() && triangle.is_finite()) {
                    return Err(Error::param("ERGM coefficients must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Full description of a simulated sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: ModelKind,
    pub n_nodes: usize,
    /// Sequence length.
    pub n: usize,
    /// Snapshots `1..=tau` follow `pre`, the rest follow `post`.
    #[serde(default)]
    pub tau: Option<usize>,
    pub pre: Model,
    #[serde(default)]
    pub post: Option<Model>,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let variant_ok = matches!(
            (self.kind, &self.pre),
            (ModelKind::Er, Model::Er { .. })
                | (ModelKind::Sbm | ModelKind::SparseSbm, Model::Sbm { .. })
                | (
                    ModelKind::DcsbmDegree | ModelKind::DcsbmHub | ModelKind::DcsbmBlock,
                    Model::Dcsbm { .. }
                )
                | (ModelKind::Rgg, Model::Rgg { .. })
                | (ModelKind::Ergm, Model::Ergm { .. })
        );
        if !variant_ok {
            return Err(Error::param(format!("model parameters do not match kind {:?}", self.kind)));
        }
        if self.n_nodes == 0 {
            return Err(Error::param("n_nodes must be positive"));
        }
        if self.n < super::MIN_SEQUENCE_LEN {
            return Err(Error::param(format!("sequence length {} is too short", self.n)));
        }
        self.pre.validate(self.n_nodes)?;
        match (self.tau, &self.post) {
            (Some(tau), Some(post)) => {
                if tau == 0 || tau >= self.n {
                    return Err(Error::param(format!("change point {tau} must satisfy 1 <= tau < n")));
                }
                if !post.same_variant(&self.pre) {
                    return Err(Error::param("post-change model must have the same form as the pre-change model"));
                }
                post.validate(self.n_nodes)?;
            }
            (None, None) => {}
            (Some(_), None) => return Err(Error::param("tau given without post-change parameters")),
            (None, Some(_)) => return Err(Error::param("post-change parameters given without tau")),
        }
        Ok(())
    }

    /// Model in force at 1-based time `t`.
    pub fn model_at(&self, t: usize) -> &Model {
        match (self.tau, &self.post) {
            (Some(tau), Some(post)) if t > tau => post,
            _ => &self.pre,
        }
    }
}

/// Contiguous balanced community labels; remainder nodes join the last block.
pub fn balanced_blocks(n_nodes: usize, k: usize) -> Vec<usize> {
    let size = (n_nodes / k).max(1);
    (0..n_nodes).map(|i| (i / size).min(k - 1)).collect()
}

/// Draws the sequence; snapshot `t` uses its own random stream `(seed, t)`.
pub fn generate_sequence(spec: &GeneratorSpec) -> Result<GraphSequence> {
    spec.validate()?;
    let clamped = AtomicBool::new(false);
    let snapshots = par::map_indexed(spec.n, |idx| {
        let t = idx + 1;
        let mut rng = substream(spec.seed, Domain::Snapshot, t as u64);
        draw_snapshot(spec.model_at(t), spec.n_nodes, &mut rng, &clamped)
    });
    if clamped.load(Ordering::Relaxed) {
        log::warn!("DCSBM edge probabilities theta_i*theta_j*block exceeded 1 and were clamped");
    }
    GraphSequence::new(snapshots)
}

fn draw_snapshot<R: Rng>(model: &Model, n: usize, rng: &mut R, clamped: &AtomicBool) -> GraphSnapshot {
    let mut g = GraphSnapshot::empty(n).expect("validated node count");
    let put = |g: &mut GraphSnapshot, i: usize, j: usize| g.set_weight(i, j, 1.0).expect("valid pair");
    match model {
        Model::Er { p } => {
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < *p {
                        put(&mut g, i, j);
                    }
                }
            }
        }
        Model::Sbm { block } => {
            let z = balanced_blocks(n, block.len());
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < block[z[i]][z[j]] {
                        put(&mut g, i, j);
                    }
                }
            }
        }
        Model::Dcsbm { theta, block } => {
            let z = balanced_blocks(n, block.len());
            for i in 0..n {
                for j in (i + 1)..n {
                    let mut p = theta[i] * theta[j] * block[z[i]][z[j]];
                    if p > 1.0 {
                        clamped.store(true, Ordering::Relaxed);
                        p = 1.0;
                    }
                    if rng.random::<f64>() < p {
                        put(&mut g, i, j);
                    }
                }
            }
        }
        Model::Rgg { radius } => {
            let pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
            let r2 = radius * radius;
            for i in 0..n {
                for j in (i + 1)..n {
                    let (dx, dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
                    if dx * dx + dy * dy <= r2 {
                        put(&mut g, i, j);
                    }
                }
            }
        }
        Model::Ergm { edge, triangle } => {
            g = ergm_gibbs(n, *edge, *triangle, ERGM_BURN_IN_FACTOR * n * n, rng);
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn er_spec(p: f64, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            kind: ModelKind::Er,
            n_nodes: 50,
            n: 100,
            tau: None,
            pre: Model::Er { p },
            post: None,
            seed,
        }
    }

    #[test]
    fn er_density_within_three_standard_errors() {
        let seq = generate_sequence(&er_spec(0.5, 1)).unwrap();
        assert_eq!(seq.len(), 100);
        let pairs = (50 * 49 / 2 * 100) as f64;
        let edges: usize = seq.iter().map(GraphSnapshot::edge_count).sum();
        let mean = edges as f64 / pairs;
        let se = (0.25 / pairs).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn identical_specs_are_bit_identical() {
        let a = generate_sequence(&er_spec(0.3, 9)).unwrap();
        let b = generate_sequence(&er_spec(0.3, 9)).unwrap();
        let c = generate_sequence(&er_spec(0.3, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sparse_sbm_change() {
        let spec = GeneratorSpec {
            kind: ModelKind::SparseSbm,
            n_nodes: 200,
            n: 100,
            tau: Some(50),
            pre: Model::Sbm { block: vec![vec![0.05, 0.03], vec![0.03, 0.05]] },
            post: Some(Model::Sbm { block: vec![vec![0.06, 0.02], vec![0.02, 0.06]] }),
            seed: 3,
        };
        let seq = generate_sequence(&spec).unwrap();
        let z = balanced_blocks(200, 2);
        let across_rate = |range: std::ops::Range<usize>| {
            let (mut e, mut tot) = (0usize, 0usize);
            for g in &seq.snapshots()[range] {
                for i in 0..200 {
                    for j in (i + 1)..200 {
                        if z[i] != z[j] {
                            tot += 1;
                            e += (g.weight(i, j) != 0.0) as usize;
                        }
                    }
                }
            }
            e as f64 / tot as f64
        };
        let before = across_rate(0..50);
        let after = across_rate(50..100);
        assert!((before - 0.03).abs() < 0.002, "{before}");
        assert!((after - 0.02).abs() < 0.002, "{after}");
    }

    #[test]
    fn rgg_adjacency_matches_distances() {
        // Re-draw the positions from the same stream and check every pair.
        let spec = GeneratorSpec {
            kind: ModelKind::Rgg,
            n_nodes: 20,
            n: 4,
            tau: None,
            pre: Model::Rgg { radius: 0.3 },
            post: None,
            seed: 5,
        };
        let seq = generate_sequence(&spec).unwrap();
        for (idx, g) in seq.iter().enumerate() {
            let mut rng = substream(5, Domain::Snapshot, idx as u64 + 1);
            let pos: Vec<(f64, f64)> = (0..20).map(|_| (rng.random(), rng.random())).collect();
            for i in 0..20 {
                for j in (i + 1)..20 {
                    let d = ((pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2)).sqrt();
                    assert_eq!(g.weight(i, j) == 1.0, d <= 0.3);
                }
            }
        }
    }

    #[test]
    fn balanced_blocks_put_remainder_last() {
        assert_eq!(balanced_blocks(7, 3), vec![0, 0, 1, 1, 2, 2, 2]);
        assert_eq!(balanced_blocks(4, 2), vec![0, 0, 1, 1]);
    }

    #[test]
    fn invalid_specs() {
        let mut s = er_spec(1.5, 0);
        assert!(generate_sequence(&s).is_err());
        s.pre = Model::Er { p: 0.5 };
        s.tau = Some(100);
        s.post = Some(Model::Er { p: 0.6 });
        assert!(s.validate().is_err());
        s.tau = Some(50);
        s.post = Some(Model::Rgg { radius: 0.1 });
        assert!(s.validate().is_err());
        s.kind = ModelKind::Rgg;
        assert!(s.validate().is_err());
        let dc = GeneratorSpec {
            kind: ModelKind::DcsbmHub,
            n_nodes: 4,
            n: 4,
            tau: None,
            pre: Model::Dcsbm { theta: vec![1.0, 1.0, 0.0, 1.0], block: vec![vec![0.1]] },
            post: None,
            seed: 0,
        };
        assert!(dc.validate().is_err());
    }

    #[test]
    fn dcsbm_clamps_probabilities() {
        let spec = GeneratorSpec {
            kind: ModelKind::DcsbmHub,
            n_nodes: 6,
            n: 4,
            tau: None,
            pre: Model::Dcsbm { theta: vec![3.0; 6], block: vec![vec![0.5]] },
            post: None,
            seed: 2,
        };
        let seq = generate_sequence(&spec).unwrap();
        assert!(seq.iter().all(|g| g.edge_count() == 15));
    }
}
