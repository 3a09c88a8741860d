//! Kernel matrices computed from a graph sequence.

mod gaussian;
mod graphlet;
mod io;
mod vector;

pub use gaussian::{gaussian_kernel, median_bandwidth};
pub use graphlet::{graphlet_kernel, graphlet_kernel_thresholded, graphlet_profile, GraphletProfile};
pub use io::{parse_kernel, read_kernel, render_kernel, write_kernel};
pub use vector::{gaussian_vector_kernel, laplacian_vector_kernel};

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::GraphSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian,
    Graphlet,
    External,
}

/// Symmetric `n x n` similarity matrix between the observations of a sequence.
///
/// Diagonal entries are stored but never enter any statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    entries: Vec<f64>,
    kind: KernelKind,
    bandwidth: Option<f64>,
}

impl KernelMatrix {
    /// Wraps row-major entries; fails unless the matrix is exactly symmetric and finite.
    pub fn new(n: usize, entries: Vec<f64>, kind: KernelKind, bandwidth: Option<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::param(format!("{} entries for a {n}x{n} kernel", entries.len())));
        }
        for i in 0..n {
            for j in i..n {
                let (a, b) = (entries[i * n + j], entries[j * n + i]);
                if !a.is_finite() {
                    return Err(Error::param(format!("non-finite kernel entry at ({i},{j})")));
                }
                if a != b {
                    return Err(Error::param(format!("kernel not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self {
            n,
            entries,
            kind,
            bandwidth,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], kind: KernelKind) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::param("kernel rows must all have length n"));
        }
        Self::new(n, rows.concat(), kind, None)
    }

    /// Builds a kernel from a pairwise function evaluated on `i <= j`.
    pub fn from_fn(n: usize, kind: KernelKind, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Self::new(n, entries, kind, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Median-heuristic bandwidth (Gaussian kernels only).
    pub fn bandwidth(&self) -> Option<f64> {
        self.bandwidth
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Joint row/column permutation: entry `(i, j)` of the result is `(order[i], order[j])`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.n);
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for &oi in order {
            let row = self.row(oi);
            entries.extend(order.iter().map(|&oj| row[oj]));
        }
        Self { entries, ..self.clone() }
    }

    /// Principal sub-matrix over a contiguous index range.
    pub fn submatrix(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.n || range.start >= range.end {
            return Err(Error::param(format!("range {range:?} invalid for a {}x{} kernel", self.n, self.n)));
        }
        let m = range.len();
        let mut entries = Vec::with_capacity(m * m);
        for i in range.clone() {
            entries.extend_from_slice(&self.row(i)[range.clone()]);
        }
        Ok(Self {
            n: m,
            entries,
            kind: self.kind,
            bandwidth: self.bandwidth,
        })
    }

    /// Applies `f` to every off-diagonal entry (diagonal left untouched).
    pub fn map_off_diagonal(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = self.n;
        let mut entries = self.entries.clone();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    entries[i * n + j] = f(entries[i * n + j]);
                }
            }
        }
        Self::new(n, entries, KernelKind::External, None)
    }
}

/// How to obtain a kernel matrix for a (sub-)sequence.
#[derive(Clone, Debug)]
pub enum KernelChoice {
    Gaussian,
    /// Graphlet kernel; weighted sequences are binarized at `threshold` first.
    Graphlet { threshold: f64 },
    /// Precomputed kernel over the full sequence; segments take sub-matrices.
    External(KernelMatrix),
}

/// Default binarization cutoff for weighted graphs routed to the graphlet kernel.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

impl KernelChoice {
    pub fn build(&self, seq: &GraphSequence) -> Result<KernelMatrix> {
        match self {
            Self::Gaussian => gaussian_kernel(seq),
            Self::Graphlet { threshold } => {
                if seq.is_binary() {
                    graphlet_kernel(seq)
                } else {
                    graphlet_kernel_thresholded(seq, *threshold)
                }
            }
            Self::External(k) => {
                if k.n() != seq.len() {
                    return Err(Error::param(format!(
                        "external kernel is {}x{} but the sequence has {} snapshots",
                        k.n(),
                        k.n(),
                        seq.len()
                    )));
                }
                Ok(k.clone())
            }
        }
    }

    /// Kernel for the segment `range` of `seq`, recomputed from that segment alone.
    pub fn build_range(&self, seq: &GraphSequence, range: Range<usize>) -> Result<KernelMatrix> {
        match self {
            Self::External(k) => k.submatrix(range),
            _ => self.build(&seq.slice(range)?),
        }
    }

    /// Kernel for an index range when only the kernel (no sequence) is available.
    pub fn external_range(&self, range: Range<usize>) -> Option<Result<KernelMatrix>> {
        match self {
            Self::External(k) => Some(k.submatrix(range)),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Graphlet { .. } => "graphlet",
            Self::External(_) => "external",
        }
    }
}
