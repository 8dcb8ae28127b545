//! Domain types and the prior model.

pub mod prior;
pub mod scores;
pub mod types;

pub use prior::{edge_prior_prob, log_prior_network, log_prior_sigma, log_prior_tau};
pub use scores::{normalize_scores, ScoreOrientation};
pub use types::{
    center_columns,
    ChainState, CoefficientPrior, ExpressionData, Hyperparams, Indicator, Matrix, NetworkState, ScoreSet,
};
