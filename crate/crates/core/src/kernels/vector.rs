//! Median-heuristic kernels for plain vector observations.

use super::{KernelKind, KernelMatrix};
use crate::error::{Error, Result};
use crate::numeric::lower_median;

fn pairwise(points: &[Vec<f64>], dist: impl Fn(&[f64], &[f64]) -> f64) -> Result<(Vec<f64>, f64)> {
    let n = points.len();
    if n < 2 {
        return Err(Error::param("need at least two observations"));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::param("observations must share one dimension"));
    }
    let mut dists = vec![0.0; n * n];
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dist(&points[i], &points[j]);
            dists[i * n + j] = v;
            dists[j * n + i] = v;
            upper.push(v);
        }
    }
    let sigma = lower_median(&mut upper);
    if sigma <= 0.0 {
        return Err(Error::DegenerateKernel("median pairwise distance is zero".into()));
    }
    Ok((dists, sigma))
}

/// `exp(-||x - y||_2^2 / (2 sigma^2))`, sigma = median Euclidean distance.
pub fn gaussian_vector_kernel(points: &[Vec<f64>]) -> Result<KernelMatrix> {
    let (d, sigma) = pairwise(points, |a, b| {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    })?;
    let n = points.len();
    let entries = d.iter().map(|&v| (-v * v / (2.0 * sigma * sigma)).exp()).collect();
    KernelMatrix::new(n, entries, KernelKind::External, Some(sigma))
}

/// `exp(-||x - y||_1 / sigma)`, sigma = median L1 distance.
pub fn laplacian_vector_kernel(points: &[Vec<f64>]) -> Result<KernelMatrix> {
    let (d, sigma) = pairwise(points, |a, b| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())?;
    let n = points.len();
    let entries = d.iter().map(|&v| (-v / sigma).exp()).collect();
    KernelMatrix::new(n, entries, KernelKind::External, Some(sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_values() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        // distances 1, 3, 2 -> lower median 2
        let g = gaussian_vector_kernel(&pts).unwrap();
        assert_eq!(g.bandwidth(), Some(2.0));
        assert!((g.get(0, 1) - (-1.0f64 / 8.0).exp()).abs() < 1e-15);
        let l = laplacian_vector_kernel(&pts).unwrap();
        assert!((l.get(0, 2) - (-1.5f64).exp()).abs() < 1e-15);
        assert_eq!(l.get(1, 1), 1.0);
    }
}
