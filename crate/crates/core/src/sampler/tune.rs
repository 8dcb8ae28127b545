//! Pilot runs over proposal-variance grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::Chain;
use super::config::{ChainConfig, RecordChannels};
use super::design::Design;
use crate::error::{invalid, Result};
use crate::model::{ExpressionData, Hyperparams, ScoreSet};

/// Acceptance rates of one pilot run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneRow {
    pub tau_prop_var: f64,
    pub e_sigma: f64,
    pub tau_acceptance: f64,
    pub sigma_acceptance: f64,
    pub network_acceptance: f64,
}

/// One pilot chain per `(tau_prop_var, e_sigma)` pair, run concurrently.
pub fn tune(
    data: &ExpressionData,
    scores: &ScoreSet,
    hp: &Hyperparams,
    pilot: &ChainConfig,
    tau_grid: &[f64],
    e_grid: &[f64],
) -> Result<Vec<TuneRow>> {
    if tau_grid.is_empty() || e_grid.is_empty() {
        return Err(invalid("tuning grids must not be empty"));
    }
    let design = Design::new(data, pilot.mode)?;
    let cfg = ChainConfig {
        record: RecordChannels { inclusion: false, tau: false, sigma: false, log_posterior: false, model_size: false },
        checkpoint_path: None,
        ..pilot.clone()
    };
    let grid: Vec<(f64, f64)> = tau_grid.iter().flat_map(|&t| e_grid.iter().map(move |&e| (t, e))).collect();
    grid.par_iter()
        .map(|&(t, e)| {
            let h = Hyperparams { tau_prop_var: t, e_sigma: Some(e), ..*hp };
            let mut chain = Chain::new(&design, scores, &h, &cfg)?;
            chain.run()?;
            let a = chain.trace().acceptance;
            Ok(TuneRow {
                tau_prop_var: t,
                e_sigma: e,
                tau_acceptance: a.tau_rate(),
                sigma_acceptance: a.sigma_rate(),
                network_acceptance: a.network_rate(),
            })
        })
        .collect()
}
