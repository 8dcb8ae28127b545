//! Evaluate the closed-form marginal likelihood of one gene and check it against brute-force integration.
//!
//! `cargo run --release --example marginal_likelihood`

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use regnet::likelihood::marginal::{log_marginal_td, log_marginal_ti};
use regnet::likelihood::oracle::{oracle_log_marginal, OracleMode};
use regnet::likelihood::orthant::mvn_cdf_at_zero;
use regnet::model::Hyperparams;

fn main() -> regnet::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 9;
    let x = DMatrix::from_fn(n, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
    let noise = DVector::from_fn(n, |_, _| 0.5 * rng.sample::<f64, _>(StandardNormal));
    let y = -(&x * DVector::from_vec(vec![1.2, 0.4])) + noise;
    let hp = Hyperparams::default();
    let quad = OracleMode::Quadrature { rel_tol: 1e-10 };

    println!("time-invariant, two regulators");
    for sigma in [0.1, 0.3, 1.0] {
        let closed = log_marginal_ti(&y, &x, sigma, &hp)?;
        let oracle = oracle_log_marginal(&y, &x, None, sigma, &hp, quad)?;
        println!("  σ = {sigma:<4} closed form {closed:>12.6}  quadrature {:>12.6}", oracle.log_value);
    }
    let empty = DMatrix::zeros(n, 0);
    println!("  null model at σ = 0.3: {:.6}", log_marginal_ti(&y, &empty, 0.3, &hp)?);

    // Offsets live only in their own time block (rows 3..6 and 6..9).
    let block = |lo: usize, hi: usize| DMatrix::from_fn(n, 1, |i, _| if (lo..hi).contains(&i) { x[(i, 0)] } else { 0.0 });
    let (x2, x3) = (block(3, 6), block(6, 9));
    let base = x.columns(0, 1).into_owned();
    let closed = log_marginal_td(&y, &base, &x2, &x3, 0.3, &hp)?;
    let oracle = oracle_log_marginal(&y, &base, Some((&x2, &x3)), 0.3, &hp, quad)?;
    println!("time-dependent, one base edge with both offsets");
    println!("  closed form {closed:.6}  quadrature {:.6}", oracle.log_value);

    let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0]);
    let p = mvn_cdf_at_zero(&DVector::zeros(3), &cov, 1e-5)?;
    println!("equicorrelated orthant, ρ = 0.5: {p:.6} (exact 0.25)");
    Ok(())
}
