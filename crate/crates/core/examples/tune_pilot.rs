//! Pilot runs over a grid of τ and σ proposal variances, reporting acceptance rates.
//!
//! `cargo run --release --example tune_pilot`

use regnet::model::{normalize_scores, Hyperparams};
use regnet::sampler::{tune, ChainConfig};
use regnet::simulate::{generate_synthetic, SyntheticSpec};

fn main() -> regnet::Result<()> {
    let (data, raw, _) = generate_synthetic(&SyntheticSpec { seed: 1, ..SyntheticSpec::default() })?;
    let scores = normalize_scores(&raw)?;
    let pilot = ChainConfig { iterations: 4_000, burn_in: 1_000, seed: 3, ..ChainConfig::default() };
    let rows = tune(&data, &scores, &Hyperparams::default(), &pilot, &[0.01, 0.1, 1.0, 4.0], &[0.05, 0.2, 0.5, 1.0])?;
    println!("tau_prop_var  e_sigma  τ acc  σ acc  network acc");
    for r in rows {
        println!(
            "{:>12}  {:>7}  {:.3}  {:.3}  {:.3}",
            r.tau_prop_var, r.e_sigma, r.tau_acceptance, r.sigma_acceptance, r.network_acceptance
        );
    }
    Ok(())
}
