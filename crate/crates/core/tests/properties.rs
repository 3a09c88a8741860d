mod common;

use kapcpd::graphs::{parse_sequence, GraphSnapshot};
use kapcpd::kernels::{graphlet_profile, parse_kernel, KernelKind, KernelMatrix};
use kapcpd::moments::{build_cache, time_moments};
use kapcpd::scan::{scan_statistic, scan_statistic_direct, ScanConfig};
use proptest::prelude::*;

fn kernel_pair() -> impl Strategy<Value = (KernelMatrix, KernelMatrix)> {
    (6usize..18).prop_flat_map(|n| {
        let m = n * (n - 1) / 2;
        (prop::collection::vec(0.0f64..1.0, m), prop::collection::vec(0.0f64..1.0, m)).prop_map(move |(a, b)| {
            let build = |v: &[f64]| {
                KernelMatrix::from_fn(n, KernelKind::External, |i, j| {
                    if i == j {
                        1.0
                    } else {
                        // Upper-triangle index of (i, j) with i < j.
                        v[i * (2 * n - i - 1) / 2 + (j - i - 1)]
                    }
                })
                .unwrap()
            };
            (build(&a), build(&b))
        })
    })
}

fn graph() -> impl Strategy<Value = GraphSnapshot> {
    (3usize..14).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    if bits[k] {
                        edges.push((i, j, 1.0));
                    }
                    k += 1;
                }
            }
            GraphSnapshot::from_edges(n, edges).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn statistic_is_nonnegative_and_matches_quadratic_form((k1, k2) in kernel_pair()) {
        let n = k1.n();
        let cfg = ScanConfig::new(n, 2, n - 2).unwrap();
        let cache = build_cache(&k1, &k2).unwrap();
        if let Ok(profile) = scan_statistic(&k1, &k2, cfg) {
            let direct = scan_statistic_direct(&cache, &k1, &k2, cfg).unwrap();
            for (p, q) in profile.points.iter().zip(&direct) {
                prop_assert!(p.s >= -1e-9);
                prop_assert!((p.s - q).abs() <= 1e-8 * q.abs().max(1.0));
            }
            prop_assert_eq!(profile.s_star, profile.points.iter().map(|p| p.s).fold(f64::NEG_INFINITY, f64::max));
        }
    }

    #[test]
    fn reversing_time_swaps_alpha_and_beta_moments((k1, k2) in kernel_pair()) {
        let n = k1.n();
        let rev: Vec<usize> = (0..n).rev().collect();
        let cache = build_cache(&k1, &k2).unwrap();
        let cache_r = build_cache(&k1.permuted(&rev), &k2.permuted(&rev)).unwrap();
        for t in 2..=n - 2 {
            let a = time_moments(&cache, t).unwrap();
            let b = time_moments(&cache_r, n - t).unwrap();
            for x in 0..2 {
                for y in 0..2 {
                    let scale = a.cov_alpha[x][x].abs().max(a.cov_beta[y][y].abs()).max(1e-12);
                    prop_assert!((a.cov_alpha[x][y] - b.cov_beta[x][y]).abs() <= 1e-9 * scale);
                    prop_assert!((a.cov_alpha_beta[x][y] - b.cov_alpha_beta[y][x]).abs() <= 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn covariance_matrices_are_positive_semidefinite((k1, k2) in kernel_pair()) {
        let n = k1.n();
        let cache = build_cache(&k1, &k2).unwrap();
        for t in 2..=n - 2 {
            let m = time_moments(&cache, t).unwrap();
            for x in 0..2 {
                let (va, vb, c) = (m.cov_alpha[x][x], m.cov_beta[x][x], m.cov_alpha_beta[x][x]);
                let tol = 1e-10 * va.abs().max(vb.abs()).max(1e-300);
                prop_assert!(va >= -tol && vb >= -tol);
                prop_assert!(c * c <= va * vb + tol * va.abs().max(vb.abs()));
            }
        }
    }

    #[test]
    fn graphlet_counts_sum_to_all_triples(g in graph()) {
        let n = g.n_nodes() as u64;
        let p = graphlet_profile(&g).unwrap();
        prop_assert_eq!(p.total(), n * (n - 1) * (n - 2) / 6);
        let edges = g.edge_count() as u64;
        // Each edge lies in n - 2 triples.
        prop_assert_eq!(p.counts[1] + 2 * p.counts[2] + 3 * p.counts[3], edges * (n - 2));
    }

    #[test]
    fn parsers_never_panic(text in "\\PC{0,200}") {
        let _ = parse_sequence(&text);
        let _ = parse_kernel(&text);
    }

    #[test]
    fn gseq_like_input_never_panics(body in prop::collection::vec((0usize..12, 0usize..12, -2.0f64..2.0), 0..20), nodes in 0usize..10, len in 0usize..6) {
        let mut text = format!("GSEQ 1 {len} {nodes} weighted\n");
        for t in 1..=len {
            text.push_str(&format!("T {t} {}\n", body.len()));
            for (i, j, w) in &body {
                text.push_str(&format!("{i} {j} {w}\n"));
            }
        }
        let _ = parse_sequence(&text);
    }
}
