#![allow(dead_code)]

use kapcpd::graphs::{generate_sequence, GeneratorSpec, GraphSequence, Model, ModelKind};
use kapcpd::kernels::{gaussian_vector_kernel, KernelKind, KernelMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric kernel with uniform off-diagonal entries and unit diagonal.
pub fn random_kernel(n: usize, rng: &mut ChaCha8Rng) -> KernelMatrix {
    let vals: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
    KernelMatrix::from_fn(n, KernelKind::External, |i, j| {
        if i == j {
            1.0
        } else {
            vals[i.min(j) * n + i.max(j)]
        }
    })
    .unwrap()
}

pub fn rbf_kernel(n: usize, rng: &mut ChaCha8Rng) -> KernelMatrix {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
    gaussian_vector_kernel(&pts).unwrap()
}

pub fn er_change(n: usize, nodes: usize, p: f64, shift: f64, tau: Option<usize>, seed: u64) -> GraphSequence {
    generate_sequence(&GeneratorSpec {
        kind: ModelKind::Er,
        n_nodes: nodes,
        n,
        tau,
        pre: Model::Er { p },
        post: tau.map(|_| Model::Er { p: p + shift }),
        seed,
    })
    .unwrap()
}

/// Concatenates ER segments with the given lengths and edge probabilities.
pub fn er_segments(parts: &[(usize, f64)], nodes: usize, seed: u64) -> GraphSequence {
    let mut snaps = Vec::new();
    for (i, &(len, p)) in parts.iter().enumerate() {
        let seq = er_change(len, nodes, p, 0.0, None, seed.wrapping_mul(31).wrapping_add(i as u64));
        snaps.extend(seq.into_inner());
    }
    GraphSequence::new(snaps).unwrap()
}

/// Brute-force permutation statistics: `(R1, R2)` for cut `t` under `order`.
pub fn split_sums(k: &KernelMatrix, order: &[usize], t: usize) -> (f64, f64) {
    let n = order.len();
    let (mut r1, mut r2) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = k.get(order[i], order[j]);
            if i < t && j < t {
                r1 += v;
            }
            if i >= t && j >= t {
                r2 += v;
            }
        }
    }
    (r1, r2)
}

/// `(alpha, beta)` from the definition.
pub fn alpha_beta(k: &KernelMatrix, order: &[usize], t: usize) -> (f64, f64) {
    let n = order.len();
    let (r1, r2) = split_sums(k, order, t);
    (r1 / (t * (t - 1)) as f64, r2 / ((n - t) * (n - t - 1)) as f64)
}
