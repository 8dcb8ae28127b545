//! Posterior summaries: inclusion probabilities, FDR, coefficients, fit and diagnostics.

pub mod coef;
pub mod diag;
pub mod fdr;
pub mod ols;
pub mod probs;
pub mod r2;
pub mod summary;

pub use coef::{beta_posterior_mean, truncated_normal_mean, CoefOptions, CoefficientEstimates};
pub use diag::{auc, chain_agreement};
pub use fdr::{bayesian_fdr, fdr_curve, select_edges, EdgeCall, FdrPoint, FdrResult};
pub use ols::{negative_fraction, ols_estimates, ols_td_closed, ols_td_stacked, ols_ti, OlsEstimates};
pub use probs::{inclusion_probs, InclusionProbs};
pub use r2::{r_squared, RSquared};
pub use summary::{refit_r_squared, summarize, threshold_network, ChainDiagnostics, PosteriorSummary, Quantiles, SummaryOptions};
