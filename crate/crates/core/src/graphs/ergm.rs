//! Single-site Gibbs sampler for the edge + triangle ERGM.

use rand::Rng;

use super::GraphSnapshot;

/// Burn-in length per snapshot is `ERGM_BURN_IN_FACTOR * N^2` dyad updates.
pub const ERGM_BURN_IN_FACTOR: usize = 20;

struct BitAdjacency {
    words: usize,
    rows: Vec<u64>,
}

impl BitAdjacency {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        Self {
            words,
            rows: vec![0; n * words],
        }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    fn common_neighbours(&self, i: usize, j: usize) -> u32 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    fn set(&mut self, i: usize, j: usize, on: bool) {
        let (wi, bi) = (j / 64, j % 64);
        let (wj, bj) = (i / 64, i % 64);
        if on {
            self.rows[i * self.words + wi] |= 1 << bi;
            self.rows[j * self.words + wj] |= 1 << bj;
        } else {
            self.rows[i * self.words + wi] &= !(1 << bi);
            self.rows[j * self.words + wj] &= !(1 << bj);
        }
    }
}

/// Runs `steps` Gibbs updates from the empty graph and returns the final state.
///
/// Each update picks a dyad uniformly and resamples it from its full
/// conditional, whose log-odds are `edge + triangle * (common neighbours)`.
pub fn ergm_gibbs<R: Rng + ?Sized>(n_nodes: usize, edge: f64, triangle: f64, steps: usize, rng: &mut R) -> GraphSnapshot {
    let mut adj = BitAdjacency::new(n_nodes);
    if n_nodes >= 2 {
        for _ in 0..steps {
            let i = rng.random_range(0..n_nodes);
            let mut j = rng.random_range(0..n_nodes - 1);
            if j >= i {
                j += 1;
            }
            let eta = edge + triangle * f64::from(adj.common_neighbours(i, j));
            let p = 1.0 / (1.0 + (-eta).exp());
            adj.set(i, j, rng.random::<f64>() < p);
        }
    }
    let mut g = GraphSnapshot::empty(n_nodes).expect("n_nodes > 0");
    for i in 0..n_nodes {
        let row = adj.row(i);
        for j in (i + 1)..n_nodes {
            if row[j / 64] >> (j % 64) & 1 == 1 {
                g.set_weight(i, j, 1.0).expect("valid pair");
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};

    #[test]
    fn zero_triangle_term_is_erdos_renyi() {
        // With triangle = 0 the stationary law is ER(sigmoid(edge)).
        let mut rng = substream(11, Domain::Snapshot, 0);
        let n = 30;
        let p = 1.0 / (1.0 + 1.0f64.exp());
        let reps = 40;
        let mean: f64 = (0..reps)
            .map(|_| ergm_gibbs(n, -1.0, 0.0, 20 * n * n, &mut rng).density())
            .sum::<f64>()
            / reps as f64;
        let se = (p * (1.0 - p) / (reps * n * (n - 1) / 2) as f64).sqrt();
        assert!((mean - p).abs() < 4.0 * se, "mean {mean} vs {p}");
    }

    #[test]
    fn bit_rows_stay_symmetric() {
        let mut a = BitAdjacency::new(70);
        a.set(3, 66, true);
        a.set(66, 5, true);
        assert_eq!(a.common_neighbours(3, 5), 1);
        a.set(3, 66, false);
        assert_eq!(a.common_neighbours(3, 5), 0);
    }
}
