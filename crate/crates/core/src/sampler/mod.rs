//! Metropolis–Hastings within Gibbs over networks, score weights and noise variances.

pub mod chain;
pub mod checkpoint;
pub mod config;
pub mod design;
pub mod moves;
pub mod tune;

pub use chain::{enumerate_posterior, run_chain, run_chains, AcceptanceStats, Chain, ChainTrace};
pub use checkpoint::{read_checkpoint, resume_chain, write_checkpoint};
pub use config::{ChainConfig, Mode, RecordChannels, SwapScope};
pub use design::Design;
pub use moves::{propose_network_move, proposal_log_prob, MoveKind, MoveProposal};
pub use tune::{tune, TuneRow};

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub(crate) fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
