use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::likelihood::orthant::OrthantOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    TimeInvariant,
    /// Base edges plus per-time-point offsets for time blocks 2 and 3.
    TimeDependent,
}

/// Where the zero cell of a swap may come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SwapScope {
    /// Any eligible zero cell of the matrix.
    #[default]
    Global,
    /// Only zero cells in the same row as the chosen one cell.
    Row,
}

/// Which summaries are accumulated after burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordChannels {
    pub inclusion: bool,
    pub tau: bool,
    pub sigma: bool,
    pub log_posterior: bool,
    pub model_size: bool,
}

impl Default for RecordChannels {
    fn default() -> Self {
        Self { inclusion: true, tau: true, sigma: true, log_posterior: true, model_size: true }
    }
}

/// Run-length and kernel settings for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Total iterations, burn-in included.
    pub iterations: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub mode: Mode,
    /// Offsets may only be active where the base edge is (time-dependent mode).
    pub constrained: bool,
    pub seed: u64,
    pub record: RecordChannels,
    /// Random edges in the starting network; `None` means one per target.
    pub initial_edges: Option<usize>,
    pub swap_scope: SwapScope,
    pub network_moves_per_iter: usize,
    pub update_tau: bool,
    pub update_sigma: bool,
    /// Recompute the joint posterior after every iteration and compare.
    pub audit: bool,
    pub orthant: OrthantOptions,
    pub checkpoint_path: Option<PathBuf>,
    /// Write a checkpoint every this many iterations (when a path is set).
    pub checkpoint_every: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 5_000,
            thinning: 1,
            mode: Mode::TimeInvariant,
            constrained: true,
            seed: 0,
            record: RecordChannels::default(),
            initial_edges: None,
            swap_scope: SwapScope::Global,
            network_moves_per_iter: 1,
            update_tau: true,
            update_sigma: true,
            audit: false,
            orthant: OrthantOptions::default(),
            checkpoint_path: None,
            checkpoint_every: 10_000,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(invalid(format!("burn_in ({}) must be below iterations ({})", self.burn_in, self.iterations)));
        }
        if self.thinning == 0 {
            return Err(invalid("thinning must be at least 1"));
        }
        if self.checkpoint_path.is_some() && self.checkpoint_every == 0 {
            return Err(invalid("checkpoint_every must be at least 1"));
        }
        Ok(())
    }

    pub fn time_dependent(&self) -> bool {
        self.mode == Mode::TimeDependent
    }

    /// Number of samples a complete run records.
    pub fn samples(&self) -> u64 {
        (self.iterations - self.burn_in) / self.thinning
    }
}
