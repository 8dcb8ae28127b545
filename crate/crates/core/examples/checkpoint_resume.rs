//! Stop a chain partway, save it to disk, resume it and confirm the result matches an uninterrupted run.
//!
//! `cargo run --release --example checkpoint_resume`

use regnet::model::{normalize_scores, Hyperparams};
use regnet::sampler::{resume_chain, write_checkpoint, Chain, ChainConfig, Design};
use regnet::simulate::{generate_synthetic, SyntheticSpec};

fn main() -> regnet::Result<()> {
    let (data, raw, _) = generate_synthetic(&SyntheticSpec { g: 20, m: 6, seed: 2, ..SyntheticSpec::default() })?;
    let scores = normalize_scores(&raw)?;
    let hp = Hyperparams::default().with_e_sigma(0.5);
    let cfg = ChainConfig { iterations: 4_000, burn_in: 1_000, seed: 9, ..ChainConfig::default() };
    let design = Design::new(&data, cfg.mode)?;

    let mut whole = Chain::new(&design, &scores, &hp, &cfg)?;
    whole.run()?;

    let path = std::env::temp_dir().join(format!("regnet-example-{}.ckpt", std::process::id()));
    let mut first = Chain::new(&design, &scores, &hp, &cfg)?;
    first.run_until(1_500)?;
    write_checkpoint(&first, &path)?;
    println!("stopped at iteration {}, checkpoint {}", first.state().iteration, path.display());
    drop(first);

    let mut second = resume_chain(&path, &design, &scores)?;
    second.run()?;
    std::fs::remove_file(&path)?;
    println!("resumed to iteration {}", second.state().iteration);
    println!("final state identical:  {}", second.state() == whole.state());
    println!("trace identical:        {}", second.trace() == whole.trace());
    println!("log posterior           {:.6} vs {:.6}", second.log_posterior(), whole.log_posterior());
    Ok(())
}
