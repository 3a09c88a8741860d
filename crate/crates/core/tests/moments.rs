mod common;

use common::{alpha_beta, random_kernel, rbf_kernel, rng};
use kapcpd::kernels::{KernelKind, KernelMatrix};
use kapcpd::moments::{
    build_cache, cross_time_correlation, finite_sample_slope, process_cov, process_mean, time_moments, Process,
};
use rand::seq::SliceRandom;

fn constant(n: usize, c: f64) -> KernelMatrix {
    KernelMatrix::from_fn(n, KernelKind::External, |i, j| if i == j { 1.0 } else { c }).unwrap()
}

#[test]
fn constant_kernel_scalars() {
    let c = 0.7;
    let k = constant(5, c);
    let cache = build_cache(&k, &k).unwrap();
    assert!((cache.kbar(0) - c).abs() < 1e-15);
    let s = cache.raw(0, 1);
    assert!((s.a - 20.0 * c * c).abs() < 1e-12);
    assert!((s.c - 120.0 * c * c).abs() < 1e-12);
    for t in 2..=3 {
        let m = time_moments(&cache, t).unwrap();
        assert!(m.cov_alpha[0][0].abs() < 1e-15 && m.cov_beta[0][0].abs() < 1e-15);
    }
}

#[test]
fn identical_kernels_give_symmetric_cache() {
    let mut r = rng(1);
    let k = random_kernel(9, &mut r);
    let cache = build_cache(&k, &k).unwrap();
    assert_eq!(cache.raw(0, 1), cache.raw(1, 0));
    assert_eq!(cache.raw(0, 0), cache.raw(1, 1));
}

#[test]
fn means_do_not_depend_on_t() {
    let mut r = rng(2);
    let (k1, k2) = (random_kernel(15, &mut r), rbf_kernel(15, &mut r));
    let cache = build_cache(&k1, &k2).unwrap();
    for t in 2..=13 {
        let m = time_moments(&cache, t).unwrap();
        for x in 0..2 {
            assert!((m.mean_alpha[x] - cache.kbar(x)).abs() < 1e-14);
            assert!((m.mean_beta[x] - cache.kbar(x)).abs() < 1e-14);
        }
        let (nf, tf) = (15.0, t as f64);
        let d_mean = cache.kbar(0) * (tf * (tf - 1.0) - (nf - tf) * (nf - tf - 1.0)) / (nf * (nf - 1.0));
        assert!((process_mean(&cache, Process::D { kernel: 0 }, t) - d_mean).abs() < 1e-14);
    }
}

#[test]
fn same_time_covariance_matches_monte_carlo() {
    let mut r = rng(3);
    let n = 12;
    let t = 5;
    let (k1, k2) = (random_kernel(n, &mut r), rbf_kernel(n, &mut r));
    let cache = build_cache(&k1, &k2).unwrap();
    let m = time_moments(&cache, t).unwrap();
    let draws = 200_000;
    let mut order: Vec<usize> = (0..n).collect();
    // Running sums of the 4-vector (alpha1, beta1, alpha2, beta2) and its outer product.
    let mut s = [0.0f64; 4];
    let mut ss = [[0.0f64; 4]; 4];
    for _ in 0..draws {
        order.shuffle(&mut r);
        let (a1, b1) = alpha_beta(&k1, &order, t);
        let (a2, b2) = alpha_beta(&k2, &order, t);
        let v = [a1, b1, a2, b2];
        for i in 0..4 {
            s[i] += v[i];
            for j in 0..4 {
                ss[i][j] += v[i] * v[j];
            }
        }
    }
    let d = draws as f64;
    let mc = |i: usize, j: usize| ss[i][j] / d - s[i] * s[j] / (d * d);
    let analytic = |i: usize, j: usize| {
        let (xa, pa) = (i / 2, i % 2);
        let (xb, pb) = (j / 2, j % 2);
        match (pa, pb) {
            (0, 0) => m.cov_alpha[xa][xb],
            (1, 1) => m.cov_beta[xa][xb],
            (0, 1) => m.cov_alpha_beta[xa][xb],
            _ => m.cov_alpha_beta[xb][xa],
        }
    };
    for i in 0..4 {
        for j in 0..4 {
            let want = analytic(i, j);
            // Standard error of a sample covariance, using the fourth-moment
            // bound var(XY) <= sqrt(E X^4 E Y^4) ~ 3 var_x var_y under near normality.
            let se = (3.0 * analytic(i, i) * analytic(j, j) / d).sqrt();
            assert!(
                (mc(i, j) - want).abs() < 4.0 * se,
                "entry ({i},{j}): mc {} vs analytic {want}",
                mc(i, j)
            );
        }
    }
}

#[test]
fn self_correlation_is_one() {
    let mut r = rng(4);
    let (k1, k2) = (random_kernel(20, &mut r), rbf_kernel(20, &mut r));
    let cache = build_cache(&k1, &k2).unwrap();
    for p in [Process::D { kernel: 0 }, Process::W { kernel: 1, r: 0.5 }] {
        for t in 2..=18 {
            assert!((cross_time_correlation(&cache, p, t, t) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn cross_time_correlation_matches_monte_carlo() {
    let mut r = rng(5);
    let n = 12;
    let (s, t) = (4, 7);
    let k = random_kernel(n, &mut r);
    let cache = build_cache(&k, &k).unwrap();
    for p in [Process::D { kernel: 0 }, Process::W { kernel: 0, r: 2.0 }] {
        let rho = cross_time_correlation(&cache, p, s, t);
        let value = |order: &[usize], u: usize| {
            let (a, b) = alpha_beta(&k, order, u);
            let c = p.coefficients(n, u);
            c[0] * a + c[1] * b
        };
        let draws = 200_000;
        let mut order: Vec<usize> = (0..n).collect();
        let mut acc = [0.0f64; 5];
        for _ in 0..draws {
            order.shuffle(&mut r);
            let (x, y) = (value(&order, s), value(&order, t));
            acc = [acc[0] + x, acc[1] + y, acc[2] + x * x, acc[3] + y * y, acc[4] + x * y];
        }
        let d = draws as f64;
        let (mx, my) = (acc[0] / d, acc[1] / d);
        let mc = (acc[4] / d - mx * my) / ((acc[2] / d - mx * mx) * (acc[3] / d - my * my)).sqrt();
        let se = (1.0 - rho * rho) / d.sqrt();
        assert!((mc - rho).abs() < 4.0 * se, "{p:?}: mc {mc} vs {rho}");
    }
}

#[test]
fn d_correlation_is_time_reversal_symmetric() {
    let mut r = rng(6);
    let n = 16;
    let k = random_kernel(n, &mut r);
    let reversed: Vec<usize> = (0..n).rev().collect();
    let kr = k.permuted(&reversed);
    let cache = build_cache(&k, &k).unwrap();
    let cache_r = build_cache(&kr, &kr).unwrap();
    let d = Process::D { kernel: 0 };
    for s in 2..=n - 2 {
        for t in s..=n - 2 {
            let a = cross_time_correlation(&cache, d, s, t);
            let b = cross_time_correlation(&cache_r, d, n - t, n - s);
            assert!((a - b).abs() < 1e-10, "({s},{t}): {a} vs {b}");
        }
    }
}

#[test]
fn slopes_are_nonnegative_and_finite_at_the_boundary() {
    let mut r = rng(7);
    for n in [8, 12, 30] {
        let (k1, k2) = (random_kernel(n, &mut r), rbf_kernel(n, &mut r));
        let cache = build_cache(&k1, &k2).unwrap();
        for p in [
            Process::D { kernel: 0 },
            Process::D { kernel: 1 },
            Process::W { kernel: 0, r: 0.5 },
            Process::W { kernel: 1, r: 2.0 },
        ] {
            for t in 2..=n - 2 {
                let c = finite_sample_slope(&cache, p, t);
                assert!(c.is_finite() && c >= -1e-9, "n={n} t={t} {p:?}: {c}");
            }
            assert!(finite_sample_slope(&cache, p, n - 3).is_finite());
        }
    }
}

#[test]
fn constant_kernel_has_undefined_slope() {
    let k = constant(10, 0.3);
    let cache = build_cache(&k, &k).unwrap();
    assert!(finite_sample_slope(&cache, Process::D { kernel: 0 }, 5).is_nan());
    let cfg = kapcpd::scan::ScanConfig::default_for(10).unwrap();
    let err = kapcpd::inference::ProcessTail::new(&cache, Process::D { kernel: 0 }, cfg).unwrap_err();
    assert!(err.is_degenerate());
}

#[test]
fn covariance_is_bilinear_in_process_weights() {
    let mut r = rng(8);
    let (k1, k2) = (random_kernel(14, &mut r), rbf_kernel(14, &mut r));
    let cache = build_cache(&k1, &k2).unwrap();
    let (s, t) = (4, 9);
    // W_r = r (t/n) alpha + ((n-t)/n) beta is linear in r, so cov is affine in r.
    let w = |r| Process::W { kernel: 0, r };
    let q = Process::D { kernel: 1 };
    let (c0, c1, c2) = (process_cov(&cache, w(0.5), s, q, t), process_cov(&cache, w(1.5), s, q, t), process_cov(&cache, w(2.5), s, q, t));
    assert!((c1 - 0.5 * (c0 + c2)).abs() < 1e-12 * (c0.abs() + c2.abs() + 1e-12));
}
