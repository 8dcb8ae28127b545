//! Prior densities: score-driven edge probabilities, offsets, τ and σ.

use crate::error::{invalid, Result};
use crate::likelihood::normal::softplus;
use crate::model::types::{Hyperparams, NetworkState, ScoreSet};

/// Log-odds `η + Σ_j τ_j s_j` of an edge.
pub fn edge_logit(scores: &[f64], eta: f64, tau: &[f64]) -> f64 {
    eta + scores.iter().zip(tau).map(|(s, t)| s * t).sum::<f64>()
}

/// Prior probability of an edge given its scores.
pub fn edge_prior_prob(scores: &[f64], eta: f64, tau: &[f64]) -> Result<f64> {
    if scores.len() != tau.len() {
        return Err(invalid(format!("{} scores but {} weights", scores.len(), tau.len())));
    }
    if scores.iter().chain(tau).chain(std::iter::once(&eta)).any(|v| !v.is_finite()) {
        return Err(invalid("non-finite score, weight or intercept"));
    }
    let x = edge_logit(scores, eta, tau);
    Ok(if x >= 0.0 { 1.0 / (1.0 + (-x).exp()) } else { x.exp() / (1.0 + x.exp()) })
}

/// `ln p` if `on`, else `ln(1 − p)`, where `p = logistic(logit)`.
#[inline]
pub fn log_bernoulli_logit(logit: f64, on: bool) -> f64 {
    if on {
        -softplus(-logit)
    } else {
        -softplus(logit)
    }
}

/// Log prior of the whole network given τ.
pub fn log_prior_network(net: &NetworkState, scores: &ScoreSet, hp: &Hyperparams, tau: &[f64]) -> Result<f64> {
    scores.check_shape(net.g(), net.m())?;
    if tau.len() != scores.sources() {
        return Err(invalid(format!("{} weights for {} score sources", tau.len(), scores.sources())));
    }
    let mut total = 0.0;
    for g in 0..net.g() {
        total += log_prior_network_row(net, scores, hp, tau, g);
    }
    Ok(total)
}

/// Contribution of target `g` to [`log_prior_network`].
pub fn log_prior_network_row(net: &NetworkState, scores: &ScoreSet, hp: &Hyperparams, tau: &[f64], g: usize) -> f64 {
    let mut total = 0.0;
    for m in 0..net.m() {
        let logit = edge_logit(&scores.row(g, m), hp.eta, tau);
        total += log_bernoulli_logit(logit, net.r.get(g, m));
    }
    let (on, off) = (hp.eta_b.ln(), (-hp.eta_b).ln_1p());
    for (sub, k) in [(&net.r_prime, &net.k2), (&net.r_dprime, &net.k3)] {
        if let (Some(_), Some(k)) = (sub, k) {
            total += k[g] as f64 * on + (net.m() - k[g]) as f64 * off;
        }
    }
    total
}

/// Sum of independent `Ga(a, rate b)` log densities; `−∞` if any `τ_j <= 0`.
pub fn log_prior_tau(tau: &[f64], a: f64, b: f64) -> f64 {
    tau.iter().map(|&t| log_gamma_density(t, a, b)).sum()
}

pub fn log_gamma_density(x: f64, shape: f64, rate: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - libm::lgamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Log density of σ when `1/σ ~ Ga((δ + k)/2, rate d/2)`.
pub fn log_prior_sigma(sigma: f64, k: usize, hp: &Hyperparams) -> f64 {
    if !(sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    let a = 0.5 * (hp.delta + k as f64);
    let b = 0.5 * hp.d;
    a * b.ln() - libm::lgamma(a) - (a + 1.0) * sigma.ln() - b / sigma
}
