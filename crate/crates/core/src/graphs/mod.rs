//! Graph snapshots, sequences of snapshots, file I/O and random generators.

mod ergm;
mod generate;
mod io;

pub use ergm::{ergm_gibbs, ERGM_BURN_IN_FACTOR};
pub use generate::{balanced_blocks, generate_sequence, GeneratorSpec, Model, ModelKind};
pub use io::{parse_sequence, read_sequence, render_sequence, write_sequence};

use crate::error::{Error, Result};

/// An undirected network observation with symmetric real edge weights and a
/// zero diagonal.
///
/// Only the strict upper triangle is stored (row-major over `i < j`); this is
/// also the vectorization used by the Gaussian kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSnapshot {
    n_nodes: usize,
    weights: Vec<f64>,
}

#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl GraphSnapshot {
    pub fn empty(n_nodes: usize) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::param("a graph needs at least one node"));
        }
        Ok(Self {
            n_nodes,
            weights: vec![0.0; n_nodes * (n_nodes - 1) / 2],
        })
    }

    /// Builds a snapshot from a dense adjacency matrix, checking symmetry and
    /// the zero diagonal.
    pub fn from_dense(adjacency: &[Vec<f64>]) -> Result<Self> {
        let n = adjacency.len();
        let mut g = Self::empty(n)?;
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != n {
                return Err(Error::param(format!("adjacency row {i} has length {}, expected {n}", row.len())));
            }
            if row[i] != 0.0 {
                return Err(Error::param(format!("non-zero diagonal entry at node {i}")));
            }
            for j in (i + 1)..n {
                let w = row[j];
                if w != adjacency[j][i] {
                    return Err(Error::param(format!("adjacency not symmetric at ({i},{j})")));
                }
                if !w.is_finite() {
                    return Err(Error::param(format!("non-finite weight at ({i},{j})")));
                }
                g.weights[pair_index(n, i, j)] = w;
            }
        }
        Ok(g)
    }

    /// Builds a snapshot from `(i, j, weight)` triples; order of `i`, `j` does
    /// not matter but self-loops are rejected.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut g = Self::empty(n_nodes)?;
        for (i, j, w) in edges {
            g.set_weight(i, j, w)?;
        }
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.weights[pair_index(self.n_nodes, i, j)],
            std::cmp::Ordering::Greater => self.weights[pair_index(self.n_nodes, j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    pub fn set_weight(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        let n = self.n_nodes;
        if i >= n || j >= n {
            return Err(Error::param(format!("node index out of range for a {n}-node graph: ({i},{j})")));
        }
        if i == j {
            return Err(Error::param(format!("self-loop at node {i}")));
        }
        if !w.is_finite() {
            return Err(Error::param(format!("non-finite weight at ({i},{j})")));
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.weights[pair_index(n, a, b)] = w;
        Ok(())
    }

    /// Upper-triangle weight vector, pairs ordered `(0,1), (0,2), ..., (n-2,n-1)`.
    pub fn upper_triangle(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_binary(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0 || w == 1.0)
    }

    /// Non-zero entries as `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_nodes;
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j))).zip(self.weights.iter()).filter_map(
            |((i, j), &w)| (w != 0.0).then_some((i, j, w)),
        )
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0.0).count()
    }

    pub fn density(&self) -> f64 {
        if self.weights.is_empty() {
            return 0.0;
        }
        self.edge_count() as f64 / self.weights.len() as f64
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n_nodes;
        (0..n).map(|i| (0..n).map(|j| self.weight(i, j)).collect()).collect()
    }

    /// Relabels nodes: node `i` of the result is node `perm[i]` of `self`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_nodes;
        if perm.len() != n {
            return Err(Error::param("relabeling has the wrong length"));
        }
        let mut g = Self::empty(n)?;
        for i in 0..n {
            for j in (i + 1)..n {
                g.weights[pair_index(n, i, j)] = self.weight(perm[i], perm[j]);
            }
        }
        Ok(g)
    }
}

/// `1` wherever `|w| >= cutoff`, `0` elsewhere.
pub fn threshold_binarize(g: &GraphSnapshot, cutoff: f64) -> GraphSnapshot {
    GraphSnapshot {
        n_nodes: g.n_nodes,
        weights: g
            .weights
            .iter()
            .map(|&w| if w.abs() >= cutoff { 1.0 } else { 0.0 })
            .collect(),
    }
}

/// Minimum sequence length: the scan needs `2 <= t <= n - 2`.
pub const MIN_SEQUENCE_LEN: usize = 4;

/// An ordered sequence of snapshots sharing one node count.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSequence {
    snapshots: Vec<GraphSnapshot>,
}

impl GraphSequence {
    pub fn new(snapshots: Vec<GraphSnapshot>) -> Result<Self> {
        if snapshots.len() < MIN_SEQUENCE_LEN {
            return Err(Error::param(format!(
                "a sequence needs at least {MIN_SEQUENCE_LEN} snapshots, got {}",
                snapshots.len()
            )));
        }
        let n_nodes = snapshots[0].n_nodes();
        if let Some((t, g)) = snapshots.iter().enumerate().find(|(_, g)| g.n_nodes() != n_nodes) {
            return Err(Error::param(format!(
                "snapshot {t} has {} nodes, expected {n_nodes}",
                g.n_nodes()
            )));
        }
        Ok(Self { snapshots })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.snapshots[0].n_nodes()
    }

    pub fn snapshots(&self) -> &[GraphSnapshot] {
        &self.snapshots
    }

    pub fn get(&self, t: usize) -> Option<&GraphSnapshot> {
        self.snapshots.get(t)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GraphSnapshot> {
        self.snapshots.iter()
    }

    pub fn is_binary(&self) -> bool {
        self.snapshots.iter().all(GraphSnapshot::is_binary)
    }

    /// Contiguous sub-sequence `range` (0-based, half open).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.start > range.end {
            return Err(Error::param(format!("range {range:?} out of bounds for length {}", self.len())));
        }
        Self::new(self.snapshots[range].to_vec())
    }

    /// Reorders the sequence: position `i` of the result holds snapshot `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::param("permutation has the wrong length"));
        }
        Self::new(order.iter().map(|&i| self.snapshots[i].clone()).collect())
    }

    pub fn into_inner(self) -> Vec<GraphSnapshot> {
        self.snapshots
    }
}

impl<'a> IntoIterator for &'a GraphSequence {
    type Item = &'a GraphSnapshot;
    type IntoIter = std::slice::Iter<'a, GraphSnapshot>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}
