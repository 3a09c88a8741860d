use super::{KernelKind, KernelMatrix};
use crate::error::{Error, Result};
use crate::graphs::GraphSequence;
use crate::numeric::lower_median;
use crate::par;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Lower median of the pairwise distances `{d_ij : i < j}` (zeros included).
pub fn median_bandwidth(distances_upper: &[f64]) -> f64 {
    lower_median(&mut distances_upper.to_vec())
}

/// Gaussian RBF kernel on upper-triangle weight vectors,
/// `k_ij = exp(-d_ij^2 / (2 sigma^2))` with `sigma` the lower median pairwise distance.
pub fn gaussian_kernel(seq: &GraphSequence) -> Result<KernelMatrix> {
    let vectors: Vec<&[f64]> = seq.iter().map(|g| g.upper_triangle()).collect();
    let n = vectors.len();
    let rows = par::map_indexed(n, |i| {
        ((i + 1)..n).map(|j| euclidean(vectors[i], vectors[j])).collect::<Vec<f64>>()
    });
    let upper: Vec<f64> = rows.iter().flatten().copied().collect();
    let sigma = median_bandwidth(&upper);
    if sigma <= 0.0 {
        return Err(Error::DegenerateKernel(
            "median pairwise distance is zero (snapshots are mostly identical)".into(),
        ));
    }
    let denom = 2.0 * sigma * sigma;
    let mut entries = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        entries[i * n + i] = 1.0;
        for (off, d) in row.iter().enumerate() {
            let j = i + 1 + off;
            let v = (-d * d / denom).exp();
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    KernelMatrix::new(n, entries, KernelKind::Gaussian, Some(sigma))
}
