//! Size-3 graphlet profiles and the cosine graphlet kernel.

use super::{KernelKind, KernelMatrix};
use crate::error::{Error, Result};
use crate::graphs::{threshold_binarize, GraphSequence, GraphSnapshot};
use crate::par;

/// Counts of the four 3-node induced subgraph classes over all node triples:
/// `[empty, one edge, two-edge path, triangle]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphletProfile {
    pub counts: [u64; 4],
}

impl GraphletProfile {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> [f64; 4] {
        let total = self.total() as f64;
        self.counts.map(|c| c as f64 / total)
    }
}

/// Exact graphlet counts from edge count, degrees and triangle count.
pub fn graphlet_profile(g: &GraphSnapshot) -> Result<GraphletProfile> {
    let n = g.n_nodes();
    if n < 3 {
        return Err(Error::param(format!("graphlet profile needs at least 3 nodes, got {n}")));
    }
    if !g.is_binary() {
        return Err(Error::NotBinary("graphlet counting requires 0/1 edge weights".into()));
    }
    let words = n.div_ceil(64);
    let mut rows = vec![0u64; n * words];
    let mut degree = vec![0u64; n];
    let mut edges = 0u64;
    for (i, j, _) in g.edges() {
        rows[i * words + j / 64] |= 1 << (j % 64);
        rows[j * words + i / 64] |= 1 << (i % 64);
        degree[i] += 1;
        degree[j] += 1;
        edges += 1;
    }
    // Each triangle is found once per edge, hence three times.
    let mut tri3 = 0u64;
    for (i, j, _) in g.edges() {
        let (ri, rj) = (&rows[i * words..(i + 1) * words], &rows[j * words..(j + 1) * words]);
        tri3 += ri.iter().zip(rj).map(|(a, b)| u64::from((a & b).count_ones())).sum::<u64>();
    }
    let triangles = tri3 / 3;
    let wedges: u64 = degree.iter().map(|&d| d * d.saturating_sub(1) / 2).sum();
    let paths = wedges - 3 * triangles;
    let n64 = n as u64;
    let one_edge = edges * (n64 - 2) - 2 * paths - 3 * triangles;
    let total = n64 * (n64 - 1) * (n64 - 2) / 6;
    let empty = total - one_edge - paths - triangles;
    Ok(GraphletProfile {
        counts: [empty, one_edge, paths, triangles],
    })
}

fn cosine_kernel(freqs: &[[f64; 4]]) -> Result<KernelMatrix> {
    let unit: Vec<[f64; 4]> = freqs
        .iter()
        .map(|f| {
            let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            f.map(|x| x / norm)
        })
        .collect();
    let n = unit.len();
    KernelMatrix::from_fn(n, KernelKind::Graphlet, |i, j| {
        if i == j {
            1.0
        } else {
            let dot: f64 = unit[i].iter().zip(&unit[j]).map(|(a, b)| a * b).sum();
            dot.clamp(0.0, 1.0)
        }
    })
}

/// Cosine similarity of graphlet frequency vectors; every snapshot must be binary.
pub fn graphlet_kernel(seq: &GraphSequence) -> Result<KernelMatrix> {
    let profiles = par::map_indexed(seq.len(), |t| graphlet_profile(&seq.snapshots()[t]));
    let freqs = profiles
        .into_iter()
        .map(|p| p.map(|p| p.frequencies()))
        .collect::<Result<Vec<_>>>()?;
    cosine_kernel(&freqs)
}

/// Graphlet kernel after binarizing every snapshot at `|w| >= cutoff`.
pub fn graphlet_kernel_thresholded(seq: &GraphSequence, cutoff: f64) -> Result<KernelMatrix> {
    if !(cutoff > 0.0) {
        return Err(Error::param(format!("threshold {cutoff} must be positive")));
    }
    let bin = GraphSequence::new(seq.iter().map(|g| threshold_binarize(g, cutoff)).collect())?;
    graphlet_kernel(&bin)
}
