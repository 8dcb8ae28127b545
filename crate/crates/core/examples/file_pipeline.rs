//! The file-based workflow: write CSV inputs, ingest them, sample, summarize and export every format.
//!
//! `cargo run --release --example file_pipeline -- [output_dir]`

use std::path::PathBuf;

use regnet::inference::{summarize, SummaryOptions};
use regnet::io::{export_results, ingest_expression, ingest_scores, write_synthetic, ExportFormat, IngestOptions, ScoreSource};
use regnet::model::Hyperparams;
use regnet::sampler::{run_chains, ChainConfig};
use regnet::simulate::{generate_synthetic, SyntheticSpec};

fn main() -> regnet::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("regnet-pipeline"));
    let (data, raw, truth) = generate_synthetic(&SyntheticSpec { g: 25, m: 6, seed: 6, ..SyntheticSpec::default() })?;
    let files = write_synthetic(&out, &data, &raw, &truth)?;
    println!("inputs: {}, {}", files.targets.display(), files.regulators.display());

    let (data, report) = ingest_expression(&files.targets, &files.regulators, &IngestOptions::default())?;
    for e in report.genes.iter().chain(&report.regulators) {
        println!("excluded {}: {}", e.name, e.reason);
    }
    let sources: Vec<ScoreSource> = files.scores.iter().map(ScoreSource::new).collect();
    let scores = ingest_scores(&sources, &data)?;
    println!("{} samples, {} targets, {} regulators, score sources {:?}", data.n(), data.g(), data.m(), scores.source_names);

    let hp = Hyperparams::default().with_e_sigma(0.5);
    let cfg = ChainConfig { iterations: 8_000, burn_in: 2_000, seed: 1, ..ChainConfig::default() };
    let traces = run_chains(&data, &scores, &hp, &cfg, 2)?;
    let summary = summarize(&data, &[&traces[0], &traces[1]], &hp, &SummaryOptions::default())?;
    for path in export_results(&summary, &ExportFormat::ALL, &out.join("results"))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
