use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use regnet::likelihood::marginal::{log_marginal_td, log_marginal_ti};
use regnet::likelihood::oracle::{oracle_log_marginal, OracleMode};
use regnet::model::{CoefficientPrior, Hyperparams};

fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Padded design restricted to rows `lo..hi`.
fn pad(x: &DMatrix<f64>, lo: usize, hi: usize) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| if (lo..hi).contains(&i) { x[(i, j)] } else { 0.0 })
}

#[test]
fn time_invariant_closed_form_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hp = Hyperparams::default();
    for case in 0..60 {
        let n = rng.random_range(3..=8);
        let k = case % 3;
        let x = randn(&mut rng, n, k);
        let y = randn(&mut rng, n, 1).column(0).into_owned() * 1.5;
        let sigma = rng.random_range(0.2..2.0);
        let closed = log_marginal_ti(&y, &x, sigma, &hp).unwrap();
        let oracle = oracle_log_marginal(&y, &x, None, sigma, &hp, OracleMode::quadrature()).unwrap();
        assert!((closed - oracle.log_value).abs() < 1e-5, "case {case}: {closed} vs {}", oracle.log_value);
    }
}

#[test]
fn printed_exponent_sign_is_rejected_by_the_oracle() {
    // With +q/(2σ) the null model would grow without bound in YᵀY; the oracle pins −q.
    let y = DVector::from_vec(vec![2.0, -1.0, 0.5, -1.5]);
    let x = DMatrix::from_vec(4, 1, vec![0.3, -0.2, 1.0, 0.4]);
    let hp = Hyperparams::default();
    let oracle = oracle_log_marginal(&y, &x, None, 0.5, &hp, OracleMode::quadrature()).unwrap();
    let closed = log_marginal_ti(&y, &x, 0.5, &hp).unwrap();
    assert!((closed - oracle.log_value).abs() < 1e-8);
    assert!(oracle.log_value < -1.0);
}

#[test]
fn alternative_prior_reading_is_also_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let hp = Hyperparams { beta_prior: CoefficientPrior::GammaRate, ..Hyperparams::default() };
    for _ in 0..10 {
        let x = randn(&mut rng, 6, 2);
        let y = randn(&mut rng, 6, 1).column(0).into_owned();
        let closed = log_marginal_ti(&y, &x, 0.9, &hp).unwrap();
        let oracle = oracle_log_marginal(&y, &x, None, 0.9, &hp, OracleMode::quadrature()).unwrap();
        assert!((closed - oracle.log_value).abs() < 1e-6);
    }
}

#[test]
fn time_dependent_closed_form_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let hp = Hyperparams { zeta: 0.8, ..Hyperparams::default() };
    let shapes = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1), (2, 1, 0), (2, 0, 1), (0, 2, 0)];
    for case in 0..54 {
        let (k, k2, k3) = shapes[case % shapes.len()];
        let n = rng.random_range(6..=9);
        let b2 = n / 3;
        let b3 = 2 * n / 3;
        let x = randn(&mut rng, n, k);
        let x2 = pad(&randn(&mut rng, n, k2), b2, b3);
        let x3 = pad(&randn(&mut rng, n, k3), b3, n);
        let y = randn(&mut rng, n, 1).column(0).into_owned();
        let sigma = rng.random_range(0.3..1.5);
        let closed = log_marginal_td(&y, &x, &x2, &x3, sigma, &hp).unwrap();
        let oracle = oracle_log_marginal(&y, &x, Some((&x2, &x3)), sigma, &hp, OracleMode::quadrature()).unwrap();
        assert!(
            (closed - oracle.log_value).abs() < 1e-5,
            "case {case} {:?}: {closed} vs {}",
            (k, k2, k3),
            oracle.log_value
        );
    }
}

#[test]
fn time_dependent_reduces_to_time_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let hp = Hyperparams::default();
    for case in 0..100 {
        let n = rng.random_range(4..=10);
        let k = case % 4;
        let x = randn(&mut rng, n, k);
        let y = randn(&mut rng, n, 1).column(0).into_owned();
        let empty = DMatrix::zeros(n, 0);
        let a = log_marginal_ti(&y, &x, 0.7, &hp).unwrap();
        let b = log_marginal_td(&y, &x, &empty, &empty, 0.7, &hp).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} {b}");
    }
}

#[test]
fn monte_carlo_and_quadrature_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let hp = Hyperparams::default();
    for seed in 0..3 {
        let x = randn(&mut rng, 6, 2);
        let y = randn(&mut rng, 6, 1).column(0).into_owned();
        let q = oracle_log_marginal(&y, &x, None, 0.8, &hp, OracleMode::quadrature()).unwrap();
        let mc = oracle_log_marginal(&y, &x, None, 0.8, &hp, OracleMode::monte_carlo(seed)).unwrap();
        assert!((q.log_value - mc.log_value).abs() < 3.0 * mc.error + 1e-12, "{} {} ± {}", q.log_value, mc.log_value, mc.error);
    }
}

#[test]
fn lattice_orthant_marginal_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let hp = Hyperparams::default();
    for seed in 0..3 {
        let x = randn(&mut rng, 8, 4);
        let y = randn(&mut rng, 8, 1).column(0).into_owned();
        let closed = log_marginal_ti(&y, &x, 0.8, &hp).unwrap();
        let mc = oracle_log_marginal(&y, &x, None, 0.8, &hp, OracleMode::monte_carlo(seed)).unwrap();
        assert!((closed - mc.log_value).abs() < 1e-2, "{closed} {} ± {}", mc.log_value, mc.error);
    }
}

#[test]
fn occam_differences_track_the_oracle() {
    // Adding an irrelevant column: closed form and oracle must move together.
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let hp = Hyperparams::default();
    for _ in 0..10 {
        let x = randn(&mut rng, 7, 2);
        let y = randn(&mut rng, 7, 1).column(0).into_owned();
        let one = x.columns(0, 1).into_owned();
        let c1 = log_marginal_ti(&y, &one, 1.0, &hp).unwrap();
        let c2 = log_marginal_ti(&y, &x, 1.0, &hp).unwrap();
        let o1 = oracle_log_marginal(&y, &one, None, 1.0, &hp, OracleMode::quadrature()).unwrap().log_value;
        let o2 = oracle_log_marginal(&y, &x, None, 1.0, &hp, OracleMode::quadrature()).unwrap().log_value;
        assert!(((c2 - c1) - (o2 - o1)).abs() < 1e-5);
    }
}
