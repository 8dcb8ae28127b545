//! Recover a planted network from synthetic data and score it against the truth.
//!
//! Run with `cargo run --release --example planted_recovery -- [iterations] [seed]`.

use regnet::inference::{auc, chain_agreement, inclusion_probs, summarize, SummaryOptions};
use regnet::model::{normalize_scores, Hyperparams};
use regnet::sampler::{run_chain, ChainConfig};
use regnet::simulate::{generate_synthetic, SyntheticSpec};

fn main() -> regnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let spec = SyntheticSpec { seed, ..SyntheticSpec::default() };
    let (data, raw, truth) = generate_synthetic(&spec)?;
    let scores = normalize_scores(&raw)?;
    let hp = Hyperparams::default().with_e_sigma(0.5);
    let cfg = ChainConfig { iterations, burn_in: iterations / 4, seed: 11, ..ChainConfig::default() };

    let start = std::time::Instant::now();
    let a = run_chain(&data, &scores, &hp, &cfg)?;
    let b = run_chain(&data, &scores, &hp, &ChainConfig { seed: 12, ..cfg.clone() })?;
    println!("two chains of {iterations} iterations in {:.1?}", start.elapsed());

    let pa = inclusion_probs(&[&a])?.p;
    let pb = inclusion_probs(&[&b])?.p;
    println!("AUC (chain A)        {:.3}", auc(&pa, &truth.r)?);
    println!("chain agreement      {:.3}", chain_agreement(&pa, &pb)?);
    println!(
        "acceptance           network {:.3}  tau {:.3}  sigma {:.3}",
        a.acceptance.network_rate(),
        a.acceptance.tau_rate(),
        a.acceptance.sigma_rate()
    );

    let summary = summarize(&data, &[&a, &b], &hp, &SummaryOptions::default())?;
    println!("pooled AUC           {:.3}", auc(&summary.p, &truth.r)?);
    println!("edges at P ≥ 0.8     {} (Bayesian FDR {:.3})", summary.fdr.selected, summary.fdr.fdr);
    println!("negative OLS at 0.2  {:?}", summary.negative_fraction);
    println!("aggregate R²         {:.3}", summary.r_squared.aggregate);

    let blind = SyntheticSpec { score_informativeness: 0.0, ..spec };
    let (data0, raw0, truth0) = generate_synthetic(&blind)?;
    let t0 = run_chain(&data0, &normalize_scores(&raw0)?, &hp, &cfg)?;
    println!("AUC, uninformative   {:.3}", auc(&inclusion_probs(&[&t0])?.p, &truth0.r)?);
    Ok(())
}
