//! Checkpoint files.
//!
//! Layout: a first line `regnet-checkpoint v1 sha256=<hex>` followed by a
//! JSON payload. The digest covers the payload bytes exactly. The payload
//! holds the hyperparameters, chain configuration, chain state, the tracked
//! posterior components, the trace so far and the RNG position, which is
//! everything needed to continue bit-identically.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::chain::{Chain, ChainTrace};
use super::config::ChainConfig;
use super::design::Design;
use crate::error::{Error, Result};
use crate::model::{ChainState, Hyperparams, ScoreSet};

const MAGIC: &str = "regnet-checkpoint v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    /// Word position as a decimal string (it is a u128).
    pub word_pos: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointPayload {
    pub hp: Hyperparams,
    pub cfg: ChainConfig,
    pub state: ChainState,
    pub loglik: Vec<f64>,
    pub log_prior_net: f64,
    pub log_post: f64,
    pub trace: ChainTrace,
    pub rng: RngState,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Atomically writes the chain's checkpoint to `path`.
pub fn write_checkpoint(chain: &Chain<'_>, path: &Path) -> Result<()> {
    let payload = CheckpointPayload {
        hp: chain.hp,
        cfg: chain.cfg.clone(),
        state: chain.state.clone(),
        loglik: chain.loglik.clone(),
        log_prior_net: chain.log_prior_net,
        log_post: chain.log_post,
        trace: chain.trace.clone(),
        rng: RngState {
            seed: chain.rng.get_seed(),
            stream: chain.rng.get_stream(),
            word_pos: chain.rng.get_word_pos().to_string(),
        },
    };
    let body = serde_json::to_vec(&payload)?;
    let digest = hex(&Sha256::digest(&body));
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        writeln!(f, "{MAGIC} sha256={digest}")?;
        f.write_all(&body)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads and verifies a checkpoint.
pub fn read_checkpoint(path: &Path) -> Result<CheckpointPayload> {
    let bytes = fs::read(path)?;
    let split = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Checkpoint("missing header".into()))?;
    let header = std::str::from_utf8(&bytes[..split]).map_err(|_| Error::Checkpoint("header is not UTF-8".into()))?;
    let digest = header
        .strip_prefix(MAGIC)
        .and_then(|rest| rest.trim().strip_prefix("sha256="))
        .ok_or_else(|| Error::Checkpoint(format!("unrecognized header {header:?}")))?;
    let body = &bytes[split + 1..];
    if hex(&Sha256::digest(body)) != digest {
        return Err(Error::Checkpoint("checksum mismatch; file is corrupt".into()));
    }
    Ok(serde_json::from_slice(body)?)
}

/// Rebuilds a chain from a checkpoint. The data must be the data the chain was started on.
pub fn resume_chain<'a>(path: &Path, design: &'a Design, scores: &'a ScoreSet) -> Result<Chain<'a>> {
    let p = read_checkpoint(path)?;
    let mut rng = ChaCha8Rng::from_seed(p.rng.seed);
    rng.set_stream(p.rng.stream);
    let pos: u128 = p.rng.word_pos.parse().map_err(|_| Error::Checkpoint("bad RNG position".into()))?;
    rng.set_word_pos(pos);
    Chain::restore(design, scores, p.hp, p.cfg, p.state, rng, p.loglik, p.log_prior_net, p.log_post, p.trace)
}
