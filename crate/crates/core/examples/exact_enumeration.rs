//! Compare chain visit frequencies with the exactly enumerated posterior on a 2 × 3 problem.
//!
//! `cargo run --release --example exact_enumeration -- [iterations]`

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use regnet::model::{ChainState, ExpressionData, Hyperparams, Indicator, NetworkState, ScoreSet};
use regnet::sampler::{enumerate_posterior, Chain, ChainConfig, Design};

fn key(r: &Indicator) -> String {
    (0..r.rows()).map(|g| (0..r.cols()).map(|m| if r.get(g, m) { '1' } else { '0' }).collect::<String>()).collect::<Vec<_>>().join("|")
}

fn main() -> regnet::Result<()> {
    let iterations: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (n, g, m) = (10, 2, 3);
    let x = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let beta = DMatrix::from_row_slice(m, g, &[0.8, 0.0, 0.0, 0.4, 0.3, 0.0]);
    let y = -(&x * beta) + DMatrix::from_fn(n, g, |_, _| 0.8 * rng.sample::<f64, _>(StandardNormal));
    let scores = ScoreSet::new(vec![DMatrix::from_fn(g, m, |_, _| rng.random::<f64>())], vec!["s".into()])?;
    let data = ExpressionData::from_matrices(y, x)?;

    let hp = Hyperparams::default().with_e_sigma(0.5);
    let cfg = ChainConfig { iterations, burn_in: 0, update_tau: false, update_sigma: false, seed: 7, ..ChainConfig::default() };
    let design = Design::new(&data, cfg.mode)?;
    let (tau, sigma) = (vec![1.5], vec![0.7, 0.9]);
    let exact = enumerate_posterior(&design, &scores, &hp, &cfg, &tau, &sigma)?;

    let state = ChainState { net: NetworkState::empty(g, m, false), tau, sigma, iteration: 0, seed: cfg.seed };
    let mut chain = Chain::with_state(&design, &scores, &hp, &cfg, state)?;
    let mut visits: HashMap<String, u64> = HashMap::new();
    for _ in 0..iterations {
        chain.step()?;
        *visits.entry(key(&chain.state().net.r)).or_default() += 1;
    }

    let mut rows: Vec<(String, f64, f64)> = exact
        .iter()
        .map(|(net, p)| {
            let k = key(&net.r);
            let f = visits.get(&k).copied().unwrap_or(0) as f64 / iterations as f64;
            (k, *p, f)
        })
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("network   exact     chain");
    for (k, p, f) in rows.iter().take(10) {
        println!("{k}  {p:.5}  {f:.5}");
    }
    let tv = 0.5 * rows.iter().map(|(_, p, f)| (p - f).abs()).sum::<f64>();
    println!("total variation over all {} networks: {tv:.4}", rows.len());
    Ok(())
}
