//! Self-checks on small instances, comparing closed forms with independent
//! numerical oracles. Backs the `verify` subcommand.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::bayesian_fdr;
use crate::likelihood::marginal::{log_marginal_td, log_marginal_ti};
use crate::likelihood::oracle::{oracle_log_marginal, OracleMode};
use crate::likelihood::orthant::{log_mvn_orthant, OrthantOptions};
use crate::model::{ChainState, ExpressionData, Hyperparams, Indicator, NetworkState, ScoreSet};
use crate::sampler::{enumerate_posterior, Chain, ChainConfig, Design, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Random instances per oracle comparison.
    pub cases: usize,
    /// Chain length for the enumeration check.
    pub chain_iterations: u64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { cases: 50, chain_iterations: 200_000, seed: 1 }
    }
}

/// Outcome of one check: the worst observed discrepancy against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, worst: f64, tolerance: f64) -> Self {
        Self { name: name.into(), worst, tolerance, passed: worst <= tolerance }
    }
}

fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn pad(x: &DMatrix<f64>, lo: usize, hi: usize) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| if (lo..hi).contains(&i) { x[(i, j)] } else { 0.0 })
}

fn ti_vs_quadrature(rng: &mut ChaCha8Rng, cases: usize, hp: &Hyperparams) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let n = rng.random_range(3..=8);
        let x = randn(rng, n, case % 3);
        let y = randn(rng, n, 1).column(0) * 1.5;
        let sigma = rng.random_range(0.2..2.0);
        let closed = log_marginal_ti(&y, &x, sigma, hp)?;
        let oracle = oracle_log_marginal(&y, &x, None, sigma, hp, OracleMode::quadrature())?;
        worst = worst.max((closed - oracle.log_value).abs() / oracle.log_value.abs().max(1.0));
    }
    Ok(worst)
}

fn td_vs_quadrature(rng: &mut ChaCha8Rng, cases: usize, hp: &Hyperparams) -> Result<f64> {
    let shapes = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1), (2, 1, 0), (2, 0, 1), (0, 2, 0)];
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let (k, k2, k3) = shapes[case % shapes.len()];
        let n = rng.random_range(6..=9);
        let x = randn(rng, n, k);
        let x2 = pad(&randn(rng, n, k2), n / 3, 2 * n / 3);
        let x3 = pad(&randn(rng, n, k3), 2 * n / 3, n);
        let y = randn(rng, n, 1).column(0).into_owned();
        let sigma = rng.random_range(0.3..1.5);
        let closed = log_marginal_td(&y, &x, &x2, &x3, sigma, hp)?;
        let oracle = oracle_log_marginal(&y, &x, Some((&x2, &x3)), sigma, hp, OracleMode::quadrature())?;
        worst = worst.max((closed - oracle.log_value).abs() / oracle.log_value.abs().max(1.0));
    }
    Ok(worst)
}

fn reduction(rng: &mut ChaCha8Rng, cases: usize, hp: &Hyperparams) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let n = rng.random_range(4..=10);
        let x = randn(rng, n, case % 4);
        let y = randn(rng, n, 1).column(0).into_owned();
        let empty = DMatrix::zeros(n, 0);
        let a = log_marginal_ti(&y, &x, 0.7, hp)?;
        let b = log_marginal_td(&y, &x, &empty, &empty, 0.7, hp)?;
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok(worst)
}

fn orthant_checks(rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    let opts = OrthantOptions::default();
    let mut diag: f64 = 0.0;
    for k in 1..=5 {
        let mean = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let var: DVector<f64> = DVector::from_fn(k, |_, _| rng.random_range(0.2..3.0));
        let cov = DMatrix::from_diagonal(&var);
        let exact: f64 = (0..k).map(|i| crate::likelihood::normal::log_norm_cdf(-mean[i] / var[i].sqrt())).sum();
        let est = log_mvn_orthant(&mean, &cov, &opts)?;
        diag = diag.max((est.log_prob.exp() - exact.exp()).abs());
    }
    let cov = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.5 });
    let p = log_mvn_orthant(&DVector::zeros(3), &cov, &opts)?.log_prob.exp();
    Ok((diag, (p - 0.25).abs()))
}

fn enumeration_tv(seed: u64, iterations: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, g, m) = (10, 2, 3);
    let x = randn(&mut rng, n, m);
    let beta = DMatrix::from_row_slice(m, g, &[0.8, 0.0, 0.0, 0.4, 0.3, 0.0]);
    let y = -(&x * beta) + randn(&mut rng, n, g) * 0.8;
    let scores = ScoreSet::new(vec![DMatrix::from_fn(g, m, |_, _| rng.random::<f64>())], vec!["s".into()])?;
    let data = ExpressionData::from_matrices(y, x)?;
    let cfg = ChainConfig {
        iterations,
        burn_in: 0,
        update_tau: false,
        update_sigma: false,
        seed,
        mode: Mode::TimeInvariant,
        ..ChainConfig::default()
    };
    let hp = Hyperparams::default();
    let design = Design::new(&data, cfg.mode)?;
    let (tau, sigma) = (vec![1.5], vec![0.7, 0.9]);
    let exact = enumerate_posterior(&design, &scores, &hp, &cfg, &tau, &sigma)?;
    let state = ChainState { net: NetworkState::empty(g, m, false), tau, sigma, iteration: 0, seed };
    let mut chain = Chain::with_state(&design, &scores, &hp, &cfg, state)?;
    let key = |r: &Indicator| r.iter_ones().fold(0u64, |acc, (i, j)| acc | 1 << (i * m + j));
    let mut visits: HashMap<u64, u64> = HashMap::new();
    for _ in 0..iterations {
        chain.step()?;
        *visits.entry(key(&chain.state().net.r)).or_default() += 1;
    }
    let tv = exact
        .iter()
        .map(|(net, p)| (visits.get(&key(&net.r)).copied().unwrap_or(0) as f64 / iterations as f64 - p).abs())
        .sum::<f64>();
    Ok(0.5 * tv)
}

fn fdr_recount(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (g, m) = (rng.random_range(1..12), rng.random_range(1..12));
        let p = DMatrix::from_fn(g, m, |_, _| if rng.random::<f64>() < 0.2 { 1.0 } else { rng.random::<f64>() });
        let cutoff = rng.random_range(0.01..=1.0);
        let got = bayesian_fdr(&p, cutoff)?;
        let sel: Vec<f64> = p.iter().filter(|&&v| 1.0 - v <= 1.0 - cutoff).map(|v| 1.0 - v).collect();
        let want = if sel.is_empty() { 0.0 } else { sel.iter().sum::<f64>() / sel.len() as f64 };
        let count_off = (got.selected as f64 - sel.len() as f64).abs();
        worst = worst.max((got.fdr - want).abs()).max(count_off);
    }
    Ok(worst)
}

/// Runs every check and reports each one.
pub fn verify(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let hp = Hyperparams::default();
    let td_hp = Hyperparams { zeta: 0.8, ..hp };
    let (diag, equi) = orthant_checks(&mut rng)?;
    Ok(vec![
        Check::new("time-invariant marginal vs quadrature", ti_vs_quadrature(&mut rng, opts.cases, &hp)?, 1e-5),
        Check::new("time-dependent marginal vs quadrature", td_vs_quadrature(&mut rng, opts.cases, &td_hp)?, 1e-5),
        Check::new("empty offsets reduce to time-invariant", reduction(&mut rng, opts.cases.max(1) * 2, &hp)?, 1e-10),
        Check::new("orthant CDF, diagonal covariance", diag, 1e-12),
        Check::new("orthant CDF, equicorrelated k = 3", equi, 1e-3),
        Check::new("chain vs enumerated posterior (TV)", enumeration_tv(opts.seed, opts.chain_iterations)?, 0.05),
        Check::new("Bayesian FDR vs recount", fdr_recount(&mut rng, opts.cases * 20)?, 1e-12),
    ])
}
