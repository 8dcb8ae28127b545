//! File formats: expression and score CSVs in, summaries and graphs out.

pub mod export;
pub mod ingest;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use export::{edge_list_tsv, export_results, network_dot, network_json, ExportFormat, SummaryDocument};
pub use ingest::{
    ingest_expression, ingest_scores, read_gene_matrix, write_expression, write_gene_matrix, ExclusionReport, Excluded,
    IngestOptions, ScoreSource,
};
pub use table::{read_table, write_table, Table};

use crate::error::Result;
use crate::model::{ExpressionData, Hyperparams, ScoreSet};
use crate::sampler::{ChainConfig, ChainTrace};
use crate::simulate::GroundTruth;

/// Everything needed to redo or summarize a `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub targets: PathBuf,
    pub regulators: PathBuf,
    pub scores: Vec<ScoreSource>,
    pub ingest: IngestOptions,
    pub hyperparams: Hyperparams,
    pub config: ChainConfig,
    pub chains: usize,
    /// Trace files, relative to the manifest's directory.
    pub traces: Vec<PathBuf>,
}

pub const MANIFEST_FILE: &str = "run.json";

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
    }

    /// Re-reads the inputs the run was made on.
    pub fn load_inputs(&self) -> Result<(ExpressionData, ScoreSet)> {
        let (data, _) = ingest_expression(&self.targets, &self.regulators, &self.ingest)?;
        let scores = ingest_scores(&self.scores, &data)?;
        Ok((data, scores))
    }
}

pub fn write_trace(path: &Path, trace: &ChainTrace) -> Result<()> {
    fs::write(path, serde_json::to_string(trace)? + "\n")?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<ChainTrace> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Files written by [`write_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFiles {
    pub targets: PathBuf,
    pub regulators: PathBuf,
    pub scores: Vec<PathBuf>,
    /// Planted coefficients in the internal positive parametrization.
    pub truth: PathBuf,
    pub truth_prime: Option<PathBuf>,
    pub truth_dprime: Option<PathBuf>,
}

/// Writes a synthetic data set in the formats the ingest path reads.
pub fn write_synthetic(dir: &Path, data: &ExpressionData, raw_scores: &ScoreSet, truth: &GroundTruth) -> Result<SyntheticFiles> {
    fs::create_dir_all(dir)?;
    let targets = dir.join("targets.csv");
    let regulators = dir.join("regulators.csv");
    write_expression(&targets, &regulators, data)?;
    let (genes, regs) = (&data.gene_names, &data.regulator_names);
    let mut scores = Vec::new();
    for (name, m) in raw_scores.source_names.iter().zip(&raw_scores.scores) {
        let path = dir.join(format!("{name}.csv"));
        write_gene_matrix(&path, genes, regs, m)?;
        scores.push(path);
    }
    let matrix = |name: &str, m: &nalgebra::DMatrix<f64>| -> Result<PathBuf> {
        let path = dir.join(name);
        write_gene_matrix(&path, genes, regs, m)?;
        Ok(path)
    };
    Ok(SyntheticFiles {
        truth: matrix("truth_beta.csv", &truth.beta)?,
        truth_prime: truth.beta_prime.as_ref().map(|m| matrix("truth_beta_prime.csv", m)).transpose()?,
        truth_dprime: truth.beta_dprime.as_ref().map(|m| matrix("truth_beta_dprime.csv", m)).transpose()?,
        targets,
        regulators,
        scores,
    })
}
