//! One Markov chain: state, tracked posterior, updates and recording.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ChainConfig, Mode};
use super::design::Design;
use super::mix_seed;
use super::moves::{propose_network_move, proposal_log_prob};
use crate::error::{invalid, mismatch, Error, Result};
use crate::likelihood::normal::log_norm_cdf;
use crate::likelihood::orthant::OrthantOptions;
use crate::model::prior::{edge_logit, log_prior_network_row};
use crate::model::{
    log_prior_network, log_prior_sigma, log_prior_tau, ChainState, ExpressionData, Hyperparams, Indicator, Matrix,
    NetworkState, ScoreSet,
};

/// Proposal and acceptance counts per update type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub network_proposed: u64,
    pub network_accepted: u64,
    /// Network moves with nothing eligible to change.
    pub network_null: u64,
    pub tau_proposed: u64,
    pub tau_accepted: u64,
    pub sigma_proposed: u64,
    pub sigma_accepted: u64,
}

fn rate(a: u64, n: u64) -> f64 {
    if n == 0 {
        f64::NAN
    } else {
        a as f64 / n as f64
    }
}

impl AcceptanceStats {
    pub fn network_rate(&self) -> f64 {
        rate(self.network_accepted, self.network_proposed)
    }

    pub fn tau_rate(&self) -> f64 {
        rate(self.tau_accepted, self.tau_proposed)
    }

    pub fn sigma_rate(&self) -> f64 {
        rate(self.sigma_accepted, self.sigma_proposed)
    }
}

/// Post-burn-in accumulators of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub g: usize,
    pub m: usize,
    pub mode: Mode,
    pub seed: u64,
    pub stream: u64,
    pub samples: u64,
    /// Row-major G×M counts of samples with the edge present.
    pub inclusion: Vec<u64>,
    pub inclusion_prime: Option<Vec<u64>>,
    pub inclusion_dprime: Option<Vec<u64>>,
    pub tau: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub log_posterior: Vec<f64>,
    pub model_size: Vec<usize>,
    pub acceptance: AcceptanceStats,
}

impl ChainTrace {
    fn new(g: usize, m: usize, cfg: &ChainConfig, stream: u64) -> Self {
        let td = cfg.time_dependent().then(|| vec![0; g * m]);
        Self {
            g,
            m,
            mode: cfg.mode,
            seed: cfg.seed,
            stream,
            samples: 0,
            inclusion: vec![0; g * m],
            inclusion_prime: td.clone(),
            inclusion_dprime: td,
            tau: Vec::new(),
            sigma: Vec::new(),
            log_posterior: Vec::new(),
            model_size: Vec::new(),
            acceptance: AcceptanceStats::default(),
        }
    }
}

/// A running chain bound to its data.
pub struct Chain<'a> {
    design: &'a Design,
    scores: &'a ScoreSet,
    pub(crate) hp: Hyperparams,
    pub(crate) cfg: ChainConfig,
    pub(crate) state: ChainState,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) loglik: Vec<f64>,
    pub(crate) log_prior_net: f64,
    pub(crate) log_post: f64,
    pub(crate) trace: ChainTrace,
}

impl<'a> Chain<'a> {
    /// Starts a chain on stream 0 of `cfg.seed`.
    pub fn new(design: &'a Design, scores: &'a ScoreSet, hp: &Hyperparams, cfg: &ChainConfig) -> Result<Self> {
        Self::with_stream(design, scores, hp, cfg, 0)
    }

    /// Starts a chain on RNG stream `stream` of `cfg.seed`.
    pub fn with_stream(
        design: &'a Design,
        scores: &'a ScoreSet,
        hp: &Hyperparams,
        cfg: &ChainConfig,
        stream: u64,
    ) -> Result<Self> {
        validate(design, scores, hp, cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        let net = random_network(design, cfg, &mut rng);
        let tau = vec![hp.a_tau / hp.b_tau; scores.sources()];
        let sigma = (0..design.g).map(|g| initial_sigma(design, g)).collect();
        let state = ChainState { net, tau, sigma, iteration: 0, seed: cfg.seed };
        let mut chain = Self::from_parts(design, scores, hp, cfg, state, rng, stream)?;
        chain.drop_unusable_rows()?;
        Ok(chain)
    }

    /// Starts from a given state (fixed networks for experiments, or tests).
    pub fn with_state(
        design: &'a Design,
        scores: &'a ScoreSet,
        hp: &Hyperparams,
        cfg: &ChainConfig,
        state: ChainState,
    ) -> Result<Self> {
        validate(design, scores, hp, cfg)?;
        if state.net.g() != design.g || state.net.m() != design.m {
            return Err(mismatch("initial network does not match the data"));
        }
        if state.net.is_time_dependent() != cfg.time_dependent() {
            return Err(invalid("initial network mode differs from the configuration"));
        }
        state.net.check(cfg.time_dependent() && cfg.constrained)?;
        if state.tau.len() != scores.sources() || state.sigma.len() != design.g {
            return Err(mismatch("initial τ or σ has the wrong length"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(0);
        Self::from_parts(design, scores, hp, cfg, state, rng, 0)
    }

    fn from_parts(
        design: &'a Design,
        scores: &'a ScoreSet,
        hp: &Hyperparams,
        cfg: &ChainConfig,
        state: ChainState,
        rng: ChaCha8Rng,
        stream: u64,
    ) -> Result<Self> {
        let mut chain = Self {
            design,
            scores,
            hp: *hp,
            cfg: cfg.clone(),
            state,
            rng,
            loglik: Vec::new(),
            log_prior_net: 0.0,
            log_post: 0.0,
            trace: ChainTrace::new(design.g, design.m, cfg, stream),
        };
        chain.loglik = chain.all_logliks()?;
        chain.log_prior_net = log_prior_network(&chain.state.net, scores, hp, &chain.state.tau)?;
        chain.log_post = chain.assemble(&chain.loglik, chain.log_prior_net);
        Ok(chain)
    }

    /// Reassembles a chain from checkpointed parts without recomputing anything.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn restore(
        design: &'a Design,
        scores: &'a ScoreSet,
        hp: Hyperparams,
        cfg: ChainConfig,
        state: ChainState,
        rng: ChaCha8Rng,
        loglik: Vec<f64>,
        log_prior_net: f64,
        log_post: f64,
        trace: ChainTrace,
    ) -> Result<Self> {
        validate(design, scores, &hp, &cfg)?;
        if state.net.g() != design.g || state.net.m() != design.m || loglik.len() != design.g {
            return Err(Error::Checkpoint("checkpoint does not match the supplied data".into()));
        }
        Ok(Self { design, scores, hp, cfg, state, rng, loglik, log_prior_net, log_post, trace })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn trace(&self) -> &ChainTrace {
        &self.trace
    }

    pub fn into_trace(self) -> ChainTrace {
        self.trace
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    /// The incrementally tracked joint log posterior.
    pub fn log_posterior(&self) -> f64 {
        self.log_post
    }

    /// Redirects checkpoints (for example to a per-chain file).
    pub fn set_checkpoint_path(&mut self, path: std::path::PathBuf) {
        self.cfg.checkpoint_path = Some(path);
    }

    pub fn finished(&self) -> bool {
        self.state.iteration >= self.cfg.iterations
    }

    fn gene_opts(&self, g: usize) -> OrthantOptions {
        gene_opts(&self.cfg, g)
    }

    fn gene_loglik(&self, net: &NetworkState, g: usize, sigma: f64) -> Result<f64> {
        self.design.log_lik(net, g, sigma, &self.hp, &self.gene_opts(g))
    }

    fn all_logliks(&self) -> Result<Vec<f64>> {
        (0..self.design.g)
            .into_par_iter()
            .map(|g| self.gene_loglik(&self.state.net, g, self.state.sigma[g]))
            .collect()
    }

    fn assemble(&self, loglik: &[f64], log_prior_net: f64) -> f64 {
        let sigma_prior: f64 =
            (0..self.design.g).map(|g| log_prior_sigma(self.state.sigma[g], self.state.net.k[g], &self.hp)).sum();
        loglik.iter().sum::<f64>()
            + log_prior_net
            + log_prior_tau(&self.state.tau, self.hp.a_tau, self.hp.b_tau)
            + sigma_prior
    }

    /// Joint log posterior recomputed from scratch.
    pub fn recompute_log_posterior(&self) -> Result<f64> {
        let ll = self.all_logliks()?;
        let lpn = log_prior_network(&self.state.net, self.scores, &self.hp, &self.state.tau)?;
        Ok(self.assemble(&ll, lpn))
    }

    /// Clears the rows whose random starting selection is rank deficient.
    fn drop_unusable_rows(&mut self) -> Result<()> {
        let bad: Vec<usize> = (0..self.design.g).filter(|&g| self.loglik[g] == f64::NEG_INFINITY).collect();
        if bad.is_empty() {
            return Ok(());
        }
        for &g in &bad {
            for m in 0..self.design.m {
                for t in [Matrix::Rp, Matrix::Rpp] {
                    if self.state.net.is_time_dependent() {
                        self.state.net.set(t, g, m, false);
                    }
                }
                self.state.net.set(Matrix::R, g, m, false);
            }
            self.loglik[g] = self.gene_loglik(&self.state.net, g, self.state.sigma[g])?;
        }
        self.log_prior_net = log_prior_network(&self.state.net, self.scores, &self.hp, &self.state.tau)?;
        self.log_post = self.assemble(&self.loglik, self.log_prior_net);
        Ok(())
    }

    /// One full sweep: network moves, τ updates, σ updates.
    pub fn step(&mut self) -> Result<()> {
        for _ in 0..self.cfg.network_moves_per_iter {
            self.network_step()?;
        }
        if self.cfg.update_tau {
            self.tau_step();
        }
        if self.cfg.update_sigma {
            self.sigma_step()?;
        }
        self.state.iteration += 1;
        if self.cfg.audit {
            self.audit()?;
        }
        let it = self.state.iteration;
        if it > self.cfg.burn_in && (it - self.cfg.burn_in).is_multiple_of(self.cfg.thinning) {
            self.record();
        }
        Ok(())
    }

    /// Runs to the configured length, writing checkpoints if configured.
    pub fn run(&mut self) -> Result<()> {
        self.run_until(self.cfg.iterations)
    }

    /// Runs until iteration `stop` (capped at the configured length). A
    /// checkpoint, if configured, is also written on stopping, so the run can
    /// be resumed later.
    pub fn run_until(&mut self, stop: u64) -> Result<()> {
        let stop = stop.min(self.cfg.iterations);
        while self.state.iteration < stop {
            self.step()?;
            if let Some(path) = &self.cfg.checkpoint_path {
                let it = self.state.iteration;
                if it.is_multiple_of(self.cfg.checkpoint_every) || it == stop {
                    super::checkpoint::write_checkpoint(self, path)?;
                }
            }
        }
        Ok(())
    }

    fn audit(&self) -> Result<()> {
        self.state.net.check(self.cfg.time_dependent() && self.cfg.constrained)?;
        let fresh = self.recompute_log_posterior()?;
        let tol = 1e-8 * fresh.abs().max(1.0);
        if (fresh - self.log_post).abs() > tol {
            return Err(Error::Audit(format!(
                "iteration {}: tracked log posterior {} differs from recomputed {}",
                self.state.iteration, self.log_post, fresh
            )));
        }
        if self.state.tau.iter().any(|&t| !(t > 0.0)) || self.state.sigma.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Audit("non-positive τ or σ".into()));
        }
        Ok(())
    }

    fn record(&mut self) {
        let rec = self.cfg.record;
        let net = &self.state.net;
        let t = &mut self.trace;
        t.samples += 1;
        if rec.inclusion {
            let add = |counts: &mut Vec<u64>, ind: &Indicator| {
                for (g, m) in ind.iter_ones() {
                    counts[g * ind.cols() + m] += 1;
                }
            };
            add(&mut t.inclusion, &net.r);
            if let (Some(c), Some(ind)) = (t.inclusion_prime.as_mut(), net.r_prime.as_ref()) {
                add(c, ind);
            }
            if let (Some(c), Some(ind)) = (t.inclusion_dprime.as_mut(), net.r_dprime.as_ref()) {
                add(c, ind);
            }
        }
        if rec.tau {
            t.tau.push(self.state.tau.clone());
        }
        if rec.sigma {
            t.sigma.push(self.state.sigma.clone());
        }
        if rec.log_posterior {
            t.log_posterior.push(self.log_post);
        }
        if rec.model_size {
            t.model_size.push(net.r.count());
        }
    }

    fn network_step(&mut self) -> Result<()> {
        let mv = propose_network_move(&self.state.net, &self.cfg, &self.hp, &mut self.rng);
        let u: f64 = self.rng.random();
        if mv.is_null() {
            self.trace.acceptance.network_null += 1;
            return Ok(());
        }
        self.trace.acceptance.network_proposed += 1;
        let forward = proposal_log_prob(&self.state.net, &self.cfg, &self.hp, &mv);
        let genes = mv.genes();
        let old_k: Vec<usize> = genes.iter().map(|&g| self.state.net.k[g]).collect();
        let mut d_prior = 0.0;
        for &(g, m) in &mv.cells {
            let on = !self.state.net.matrix(mv.target).get(g, m);
            let logit = match mv.target {
                Matrix::R => edge_logit(&self.scores.row(g, m), self.hp.eta, &self.state.tau),
                Matrix::Rp | Matrix::Rpp => (self.hp.eta_b / (1.0 - self.hp.eta_b)).ln(),
            };
            d_prior += if on { logit } else { -logit };
        }
        mv.apply(&mut self.state.net);
        let backward = proposal_log_prob(&self.state.net, &self.cfg, &self.hp, &mv.reverse());
        let mut new_ll = Vec::with_capacity(genes.len());
        let mut delta = d_prior;
        for (i, &g) in genes.iter().enumerate() {
            let sigma = self.state.sigma[g];
            let ll = self.gene_loglik(&self.state.net, g, sigma)?;
            delta += ll - self.loglik[g];
            delta += log_prior_sigma(sigma, self.state.net.k[g], &self.hp) - log_prior_sigma(sigma, old_k[i], &self.hp);
            new_ll.push(ll);
        }
        let log_alpha = delta + backward - forward;
        if log_alpha.is_finite() && u.ln() < log_alpha {
            for (&g, ll) in genes.iter().zip(new_ll) {
                self.loglik[g] = ll;
            }
            self.log_prior_net += d_prior;
            self.log_post += delta;
            self.trace.acceptance.network_accepted += 1;
        } else {
            mv.reverse().apply(&mut self.state.net);
        }
        Ok(())
    }

    fn tau_step(&mut self) {
        let s = self.hp.tau_prop_var.sqrt();
        for j in 0..self.state.tau.len() {
            let old = self.state.tau[j];
            let new = loop {
                let z: f64 = self.rng.sample(StandardNormal);
                let x = old + s * z;
                if x > 0.0 {
                    break x;
                }
            };
            let u: f64 = self.rng.random();
            self.trace.acceptance.tau_proposed += 1;
            let mut tau = self.state.tau.clone();
            tau[j] = new;
            let lpn = network_prior_given(&self.state.net, self.scores, &self.hp, &tau);
            let prior = log_prior_tau(&[new], self.hp.a_tau, self.hp.b_tau) - log_prior_tau(&[old], self.hp.a_tau, self.hp.b_tau);
            let delta = lpn - self.log_prior_net + prior;
            let log_alpha = delta + log_norm_cdf(old / s) - log_norm_cdf(new / s);
            if u.ln() < log_alpha {
                self.state.tau = tau;
                self.log_prior_net = lpn;
                self.log_post += delta;
                self.trace.acceptance.tau_accepted += 1;
            }
        }
    }

    fn sigma_step(&mut self) -> Result<()> {
        let e = self.hp.require_e_sigma()?;
        let g_count = self.design.g;
        let mut draws = Vec::with_capacity(g_count);
        for g in 0..g_count {
            let old = self.state.sigma[g];
            let proposal = Gamma::new(old * old / e, e / old).map_err(|err| invalid(err.to_string()))?;
            let new: f64 = self.rng.sample(proposal);
            let u: f64 = self.rng.random();
            draws.push((new, u));
        }
        let net = &self.state.net;
        let evals: Vec<Result<f64>> = (0..g_count)
            .into_par_iter()
            .map(|g| {
                let new = draws[g].0;
                if new > 0.0 && new.is_finite() {
                    self.gene_loglik(net, g, new)
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            })
            .collect();
        for (g, ll) in evals.into_iter().enumerate() {
            let ll = ll?;
            let (new, u) = draws[g];
            self.trace.acceptance.sigma_proposed += 1;
            if ll == f64::NEG_INFINITY {
                continue;
            }
            let old = self.state.sigma[g];
            let k = self.state.net.k[g];
            let delta = ll - self.loglik[g] + log_prior_sigma(new, k, &self.hp) - log_prior_sigma(old, k, &self.hp);
            let log_alpha = delta + log_gamma_proposal(old, new, e) - log_gamma_proposal(new, old, e);
            if u.ln() < log_alpha {
                self.state.sigma[g] = new;
                self.loglik[g] = ll;
                self.log_post += delta;
                self.trace.acceptance.sigma_accepted += 1;
            }
        }
        Ok(())
    }
}

pub(crate) fn gene_opts(cfg: &ChainConfig, g: usize) -> OrthantOptions {
    cfg.orthant.with_seed(mix_seed(cfg.orthant.seed ^ cfg.seed, g as u64))
}

/// `ln q(to | from)` for the moment-matched Gamma proposal (mean `from`, variance `e`).
fn log_gamma_proposal(to: f64, from: f64, e: f64) -> f64 {
    let shape = from * from / e;
    let scale = e / from;
    -libm::lgamma(shape) - shape * scale.ln() + (shape - 1.0) * to.ln() - to / scale
}

fn network_prior_given(net: &NetworkState, scores: &ScoreSet, hp: &Hyperparams, tau: &[f64]) -> f64 {
    (0..net.g()).map(|g| log_prior_network_row(net, scores, hp, tau, g)).sum()
}

fn validate(design: &Design, scores: &ScoreSet, hp: &Hyperparams, cfg: &ChainConfig) -> Result<()> {
    cfg.validate()?;
    hp.validate()?;
    if cfg.update_sigma {
        hp.require_e_sigma()?;
    }
    scores.check_shape(design.g, design.m)?;
    if cfg.time_dependent() != design.time_dependent() {
        return Err(invalid("chain mode and design mode differ"));
    }
    Ok(())
}

fn initial_sigma(design: &Design, g: usize) -> f64 {
    // y is centered, so yᵀy/(n − 1) is the sample variance
    (design.yty(g) / (design.n as f64 - 1.0)).max(1e-8)
}

fn random_network(design: &Design, cfg: &ChainConfig, rng: &mut ChaCha8Rng) -> NetworkState {
    let mut net = NetworkState::empty(design.g, design.m, cfg.time_dependent());
    let cells = design.g * design.m;
    let want = cfg.initial_edges.unwrap_or(design.g).min(cells);
    for idx in rand::seq::index::sample(rng, cells, want) {
        net.set(Matrix::R, idx / design.m, idx % design.m, true);
    }
    net
}

/// Runs one chain to completion and returns its trace.
pub fn run_chain(data: &ExpressionData, scores: &ScoreSet, hp: &Hyperparams, cfg: &ChainConfig) -> Result<ChainTrace> {
    let design = Design::new(data, cfg.mode)?;
    let mut chain = Chain::new(&design, scores, hp, cfg)?;
    chain.run()?;
    Ok(chain.into_trace())
}

/// Runs `chains` chains concurrently on streams `0..chains` of `cfg.seed`.
///
/// Checkpoints, if configured, go to `<path>.<chain index>`.
pub fn run_chains(
    data: &ExpressionData,
    scores: &ScoreSet,
    hp: &Hyperparams,
    cfg: &ChainConfig,
    chains: usize,
) -> Result<Vec<ChainTrace>> {
    if chains == 0 {
        return Err(invalid("at least one chain is required"));
    }
    let design = Design::new(data, cfg.mode)?;
    (0..chains)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.checkpoint_path = cfg.checkpoint_path.as_ref().map(|p| {
                let mut s = p.clone().into_os_string();
                s.push(format!(".{i}"));
                s.into()
            });
            let mut chain = Chain::with_stream(&design, scores, hp, &c, i as u64)?;
            chain.run()?;
            Ok(chain.into_trace())
        })
        .collect()
}

/// Exact posterior over all base networks for fixed τ and σ (time-invariant mode).
///
/// Returns every network with its normalized probability. Only feasible for
/// tiny problems; the cell count is capped at 20.
pub fn enumerate_posterior(
    design: &Design,
    scores: &ScoreSet,
    hp: &Hyperparams,
    cfg: &ChainConfig,
    tau: &[f64],
    sigma: &[f64],
) -> Result<Vec<(NetworkState, f64)>> {
    if design.time_dependent() {
        return Err(Error::Unsupported("enumeration covers the time-invariant model only".into()));
    }
    let cells = design.g * design.m;
    if cells > 20 {
        return Err(Error::Unsupported(format!("{cells} cells is too many to enumerate")));
    }
    let mut out = Vec::with_capacity(1 << cells);
    for mask in 0u64..(1 << cells) {
        let r = Indicator::from_fn(design.g, design.m, |g, m| mask >> (g * design.m + m) & 1 == 1);
        let net = NetworkState::from_indicators(r, None, None)?;
        let mut lp = log_prior_network(&net, scores, hp, tau)?;
        for g in 0..design.g {
            lp += design.log_lik(&net, g, sigma[g], hp, &gene_opts(cfg, g))?;
            lp += log_prior_sigma(sigma[g], net.k[g], hp);
        }
        out.push((net, lp));
    }
    let top = out.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = out.iter().map(|p| (p.1 - top).exp()).sum();
    Ok(out.into_iter().map(|(n, lp)| (n, (lp - top).exp() / z)).collect())
}
