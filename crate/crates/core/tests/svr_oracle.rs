mod common;

use common::checks::small_svr;
use common::{brute_force_dual, dual_value, kkt_violation, linear, rbf, rng};
use moodcap_core::regression::{gram_matrix, solve_dual, svr_fit, svr_fit_with, Gamma, Kernel, SmoConfig, SvrParams};
use proptest::prelude::*;
use rand::Rng;

const DUAL_TOL: f64 = 1e-3;
const KKT_TOL: f64 = 1e-3;

fn tight() -> SmoConfig {
    SmoConfig { tolerance: 1e-6, ..SmoConfig::default() }
}

fn oracle_gram(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    x.iter().map(|a| x.iter().map(|b| rbf(gamma, a, b)).collect()).collect()
}

#[test]
fn smo_reaches_the_brute_force_optimum() {
    for seed in 0..20 {
        let p = small_svr(seed);
        let k = oracle_gram(&p.x, p.gamma);
        let sol = solve_dual(&k, &p.y, p.c, p.eps, &tight()).unwrap();
        let smo = dual_value(&k, &p.y, p.eps, &sol.dual_coefs);
        let (brute, _) = brute_force_dual(&k, &p.y, p.eps, p.c);
        assert!(smo >= brute - DUAL_TOL, "seed {seed}: smo {smo} < brute {brute}");
        let v = kkt_violation(&k, &p.y, &sol.dual_coefs, sol.bias, p.c, p.eps);
        assert!(v <= KKT_TOL, "seed {seed}: kkt {v}");
    }
}

#[test]
fn default_tolerance_also_satisfies_kkt() {
    for seed in 0..20 {
        let p = small_svr(seed);
        let k = oracle_gram(&p.x, p.gamma);
        let sol = solve_dual(&k, &p.y, p.c, p.eps, &SmoConfig::default()).unwrap();
        assert!(kkt_violation(&k, &p.y, &sol.dual_coefs, sol.bias, p.c, p.eps) <= KKT_TOL);
    }
}

#[test]
fn gram_matrix_matches_textbook_kernels() {
    let p = small_svr(4);
    let g = gram_matrix(&p.x, Kernel::Rbf, p.gamma);
    let lin = gram_matrix(&p.x, Kernel::Linear, 0.0);
    for i in 0..p.x.len() {
        for j in 0..p.x.len() {
            assert!((g[i][j] - rbf(p.gamma, &p.x[i], &p.x[j])).abs() < 1e-14);
            assert!((lin[i][j] - linear(&p.x[i], &p.x[j])).abs() < 1e-14);
        }
    }
}

#[test]
fn linear_kernel_recovers_a_line() {
    let x: Vec<Vec<f64>> = (0..21).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
    let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
    let eps = 0.01;
    let p = SvrParams { c: 100.0, gamma: Gamma::Scale, kernel: Kernel::Linear, epsilon: eps };
    let m = svr_fit(&x, &y, &p).unwrap();
    let worst = x.iter().zip(&y).map(|(r, t)| (m.predict_row(r) - t).abs()).fold(0.0, f64::max);
    assert!(worst <= eps + 1e-3, "max error {worst}");
}

#[test]
fn constant_target_gives_constant_prediction() {
    let mut r = rng(9);
    let x: Vec<Vec<f64>> = (0..15).map(|_| vec![r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]).collect();
    let y = vec![0.4; 15];
    let p = SvrParams { c: 1.0, gamma: Gamma::Value(1.0), kernel: Kernel::Rbf, epsilon: 0.1 };
    let m = svr_fit(&x, &y, &p).unwrap();
    for row in &x {
        assert!((m.predict_row(row) - 0.4).abs() <= 0.1 + 1e-9);
    }
}

#[test]
fn small_epsilon_large_c_interpolates() {
    let mut r = rng(11);
    let x: Vec<Vec<f64>> = (0..8).map(|_| vec![r.gen_range(-2.0..2.0)]).collect();
    let y: Vec<f64> = x.iter().map(|v| v[0].sin()).collect();
    let p = SvrParams { c: 1e4, gamma: Gamma::Value(2.0), kernel: Kernel::Rbf, epsilon: 0.0 };
    let m = svr_fit_with(&x, &y, &p, &tight()).unwrap();
    for (row, t) in x.iter().zip(&y) {
        assert!((m.predict_row(row) - t).abs() < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn coefficients_sum_to_zero_and_respect_the_box(seed in 0u64..100_000, n in 2usize..25) {
        let mut r = rng(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let c = r.gen_range(0.1..10.0);
        let k = gram_matrix(&x, Kernel::Rbf, 0.5);
        let sol = solve_dual(&k, &y, c, 0.05, &SmoConfig::default()).unwrap();
        prop_assert!(sol.dual_coefs.iter().sum::<f64>().abs() < 1e-9);
        prop_assert!(sol.dual_coefs.iter().all(|d| d.abs() <= c + 1e-12));
        prop_assert!(kkt_violation(&k, &y, &sol.dual_coefs, sol.bias, c, 0.05) <= KKT_TOL);
    }
}
