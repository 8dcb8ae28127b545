//! End-to-end posterior summary of one or more chains.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Error, Result};
use crate::inference::{
    bayesian_fdr, beta_posterior_mean, chain_agreement, fdr_curve, inclusion_probs, ols::negative_fraction,
    ols_estimates, r_squared, select_edges, CoefOptions, EdgeCall, FdrPoint, FdrResult, RSquared,
};
use crate::model::{ExpressionData, Hyperparams, Indicator, NetworkState};
use crate::sampler::{ChainTrace, Design, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryOptions {
    /// Edge-call threshold on P.
    pub cutoff: f64,
    /// Base edges with P at least this enter the coefficient fit.
    pub coef_cutoff: f64,
    /// Same for the time offsets.
    pub offset_cutoff: f64,
    pub fdr_cutoffs: Vec<f64>,
    /// Selection threshold for the OLS sign check.
    pub negativity_cutoff: f64,
    pub coef: CoefOptions,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            cutoff: 0.8,
            coef_cutoff: 0.15,
            offset_cutoff: 0.1,
            fdr_cutoffs: (1..=19).map(|i| i as f64 * 0.05).collect(),
            negativity_cutoff: 0.2,
            coef: CoefOptions::default(),
        }
    }
}

impl SummaryOptions {
    pub fn validate(&self) -> Result<()> {
        let cuts = [self.cutoff, self.coef_cutoff, self.offset_cutoff, self.negativity_cutoff];
        if cuts.iter().chain(&self.fdr_cutoffs).any(|&c| !(c > 0.0 && c <= 1.0)) {
            return Err(invalid("cutoffs must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Five-number-ish summary of a scalar posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub mean: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

impl Quantiles {
    /// Linear-interpolation quantiles; `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(Self { mean: v.iter().sum::<f64>() / v.len() as f64, q025: q(0.025), q50: q(0.5), q975: q(0.975) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub chains: usize,
    pub samples: u64,
    /// Pairwise Pearson correlations of per-chain P matrices; `None` if undefined.
    pub agreement: Vec<(usize, usize, Option<f64>)>,
    pub network_acceptance: Vec<f64>,
    pub tau_acceptance: Vec<f64>,
    pub sigma_acceptance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub gene_names: Vec<String>,
    pub regulator_names: Vec<String>,
    pub mode: Mode,
    pub options: SummaryOptions,
    pub p: DMatrix<f64>,
    pub p_prime: Option<DMatrix<f64>>,
    pub p_dprime: Option<DMatrix<f64>>,
    /// Edges called at `options.cutoff`.
    pub edges: Vec<EdgeCall>,
    pub fdr: FdrResult,
    pub fdr_curve: Vec<FdrPoint>,
    /// Signed posterior means; zero outside the coefficient network.
    pub beta_hat: DMatrix<f64>,
    pub beta_prime_hat: Option<DMatrix<f64>>,
    pub beta_dprime_hat: Option<DMatrix<f64>>,
    /// Least-squares fit on the coefficient network.
    pub ols_hat: DMatrix<f64>,
    pub r_squared: RSquared,
    pub tau: Vec<Option<Quantiles>>,
    /// Posterior mean of each target's σ.
    pub sigma_mean: Vec<Option<f64>>,
    pub negative_fraction: Option<f64>,
    pub diagnostics: ChainDiagnostics,
}

/// Network with every base edge at `p ≥ cut` and every offset at
/// `p′ ≥ offset_cut` whose base edge is also kept.
pub fn threshold_network(
    p: &DMatrix<f64>,
    p_prime: Option<&DMatrix<f64>>,
    p_dprime: Option<&DMatrix<f64>>,
    cut: f64,
    offset_cut: f64,
) -> Result<NetworkState> {
    let (g, m) = p.shape();
    let r = Indicator::from_fn(g, m, |i, j| p[(i, j)] >= cut);
    let nested = |q: Option<&DMatrix<f64>>| q.map(|q| Indicator::from_fn(g, m, |i, j| r.get(i, j) && q[(i, j)] >= offset_cut));
    let (rp, rpp) = (nested(p_prime), nested(p_dprime));
    NetworkState::from_indicators(r, rp, rpp)
}

/// Summarizes pooled traces from chains run on `data`.
pub fn summarize(
    data: &ExpressionData,
    traces: &[&ChainTrace],
    hp: &Hyperparams,
    opts: &SummaryOptions,
) -> Result<PosteriorSummary> {
    opts.validate()?;
    let probs = inclusion_probs(traces)?;
    let mode = traces[0].mode;
    if probs.p.shape() != (data.g(), data.m()) {
        return Err(mismatch("traces do not match the data"));
    }
    let edges = select_edges(&probs.p, opts.cutoff)?;
    let fdr = bayesian_fdr(&probs.p, opts.cutoff)?;
    let curve = fdr_curve(&probs.p, &opts.fdr_cutoffs)?;

    let sigma_mean: Vec<Option<f64>> = (0..data.g())
        .map(|g| {
            let vals: Vec<f64> = traces.iter().flat_map(|t| t.sigma.iter().map(move |s| s[g])).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    let j = traces[0].tau.first().map_or(0, Vec::len);
    let tau = (0..j)
        .map(|s| Quantiles::of(&traces.iter().flat_map(|t| t.tau.iter().map(move |v| v[s])).collect::<Vec<_>>()))
        .collect();

    let coef_net =
        threshold_network(&probs.p, probs.p_prime.as_ref(), probs.p_dprime.as_ref(), opts.coef_cutoff, opts.offset_cutoff)?;
    let design = Design::new(data, mode)?;
    // σ falls back to its starting value when the trace did not record it
    let sigma: Vec<f64> = sigma_mean
        .iter()
        .enumerate()
        .map(|(g, s)| s.unwrap_or_else(|| (design.yty(g) / (data.n().max(2) - 1) as f64).max(1e-8)))
        .collect();
    let coefs = beta_posterior_mean(&design, &coef_net, &sigma, hp, &opts.coef)?;
    let ols = ols_estimates(data, &coef_net)?;
    let r2 = r_squared(data, &coefs.beta, coefs.beta_prime.as_ref(), coefs.beta_dprime.as_ref())?;

    let neg_net = threshold_network(&probs.p, None, None, opts.negativity_cutoff, 1.0)?;
    let neg_cells: Vec<(usize, usize)> = neg_net.r.iter_ones().collect();
    let negative = match negative_fraction(&ols_estimates(data, &neg_net)?, &neg_cells) {
        Ok(f) => Some(f),
        Err(Error::InvalidInput(_)) => None,
        Err(e) => return Err(e),
    };

    let per_chain: Vec<DMatrix<f64>> =
        traces.iter().map(|t| inclusion_probs(&[t]).map(|p| p.p)).collect::<Result<_>>()?;
    let mut agreement = Vec::new();
    for a in 0..per_chain.len() {
        for b in a + 1..per_chain.len() {
            agreement.push((a, b, chain_agreement(&per_chain[a], &per_chain[b]).ok()));
        }
    }
    let diagnostics = ChainDiagnostics {
        chains: traces.len(),
        samples: probs.samples,
        agreement,
        network_acceptance: traces.iter().map(|t| t.acceptance.network_rate()).collect(),
        tau_acceptance: traces.iter().map(|t| t.acceptance.tau_rate()).collect(),
        sigma_acceptance: traces.iter().map(|t| t.acceptance.sigma_rate()).collect(),
    };

    Ok(PosteriorSummary {
        gene_names: data.gene_names.clone(),
        regulator_names: data.regulator_names.clone(),
        mode,
        options: opts.clone(),
        p: probs.p,
        p_prime: probs.p_prime,
        p_dprime: probs.p_dprime,
        edges,
        fdr,
        fdr_curve: curve,
        beta_hat: coefs.beta,
        beta_prime_hat: coefs.beta_prime,
        beta_dprime_hat: coefs.beta_dprime,
        ols_hat: ols.beta,
        r_squared: r2,
        tau,
        sigma_mean,
        negative_fraction: negative,
        diagnostics,
    })
}

/// Aggregate R² of least-squares refits on the networks thresholded at each cutoff.
pub fn refit_r_squared(
    data: &ExpressionData,
    p: &DMatrix<f64>,
    p_prime: Option<&DMatrix<f64>>,
    p_dprime: Option<&DMatrix<f64>>,
    cutoffs: &[f64],
    offset_cutoff: f64,
) -> Result<Vec<(f64, f64)>> {
    cutoffs
        .iter()
        .map(|&c| {
            let net = threshold_network(p, p_prime, p_dprime, c, offset_cutoff)?;
            let ols = ols_estimates(data, &net)?;
            if !ols.skipped.is_empty() {
                return Err(Error::Singular(format!("{} targets could not be refit at cutoff {c}", ols.skipped.len())));
            }
            let r2 = r_squared(data, &ols.beta, ols.beta_prime.as_ref(), ols.beta_dprime.as_ref())?;
            Ok((c, r2.aggregate))
        })
        .collect()
}
