//! Writing summaries: edge tables, DOT graphs and JSON documents.
//!
//! Every writer is a pure function of its input, so re-exporting the same
//! summary reproduces the files byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ingest::write_gene_matrix;
use crate::error::Result;
use crate::inference::{ChainDiagnostics, EdgeCall, FdrPoint, FdrResult, PosteriorSummary, Quantiles, RSquared};
use crate::sampler::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExportFormat {
    /// `edges.tsv`: called edges with probabilities and coefficients.
    EdgeList,
    /// `network.dot`.
    Dot,
    /// `summary.json`.
    Json,
    /// `network.json`: nodes and arcs.
    JsonGraph,
    /// `p_matrix.csv` (and the offset matrices in time-dependent mode).
    Matrix,
}

impl ExportFormat {
    pub const ALL: [ExportFormat; 5] = [Self::EdgeList, Self::Dot, Self::Json, Self::JsonGraph, Self::Matrix];
}

/// The edge table as text.
pub fn edge_list_tsv(s: &PosteriorSummary) -> String {
    let mut out = String::from("gene\tregulator\tp\tbeta_hat\tols_hat\n");
    for e in &s.edges {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            s.gene_names[e.g], s.regulator_names[e.m], e.p, s.beta_hat[(e.g, e.m)], s.ols_hat[(e.g, e.m)]
        );
    }
    out
}

fn dot_id(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Regulators and targets as typed nodes, one arc per called edge.
pub fn network_dot(s: &PosteriorSummary) -> String {
    let mut out = String::from("digraph regnet {\n  rankdir=LR;\n");
    for name in &s.regulator_names {
        let _ = writeln!(out, "  {} [label={}, type=regulator, shape=ellipse];", dot_id(&format!("R:{name}")), dot_id(name));
    }
    for name in &s.gene_names {
        let _ = writeln!(out, "  {} [label={}, type=target, shape=box];", dot_id(&format!("T:{name}")), dot_id(name));
    }
    for e in &s.edges {
        let _ = writeln!(
            out,
            "  {} -> {} [p={}, beta={}];",
            dot_id(&format!("R:{}", s.regulator_names[e.m])),
            dot_id(&format!("T:{}", s.gene_names[e.g])),
            e.p,
            s.beta_hat[(e.g, e.m)]
        );
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphNode {
    id: String,
    name: String,
    kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphEdge {
    source: String,
    target: String,
    p: f64,
    beta_hat: f64,
    ols_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Graph {
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
}

/// The DOT content as JSON.
pub fn network_json(s: &PosteriorSummary) -> Result<String> {
    let node = |prefix: &str, kind: &str, name: &String| GraphNode {
        id: format!("{prefix}:{name}"),
        name: name.clone(),
        kind: kind.into(),
    };
    let mut nodes: Vec<GraphNode> = s.regulator_names.iter().map(|n| node("R", "regulator", n)).collect();
    nodes.extend(s.gene_names.iter().map(|n| node("T", "target", n)));
    let edges = s
        .edges
        .iter()
        .map(|e| GraphEdge {
            source: format!("R:{}", s.regulator_names[e.m]),
            target: format!("T:{}", s.gene_names[e.g]),
            p: e.p,
            beta_hat: s.beta_hat[(e.g, e.m)],
            ols_hat: s.ols_hat[(e.g, e.m)],
        })
        .collect();
    Ok(serde_json::to_string_pretty(&Graph { nodes, edges })? + "\n")
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Key-value summary document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub mode: Mode,
    pub genes: Vec<String>,
    pub regulators: Vec<String>,
    pub cutoff: f64,
    pub fdr: FdrResult,
    pub fdr_curve: Vec<FdrPoint>,
    pub edges: Vec<EdgeCall>,
    pub r_squared: RSquared,
    pub tau: Vec<Option<Quantiles>>,
    pub sigma_mean: Vec<Option<f64>>,
    pub negative_fraction: Option<f64>,
    pub diagnostics: ChainDiagnostics,
    pub p: Vec<Vec<f64>>,
    pub p_prime: Option<Vec<Vec<f64>>>,
    pub p_dprime: Option<Vec<Vec<f64>>>,
    pub beta_hat: Vec<Vec<f64>>,
    pub ols_hat: Vec<Vec<f64>>,
}

impl SummaryDocument {
    pub fn from_summary(s: &PosteriorSummary) -> Self {
        Self {
            mode: s.mode,
            genes: s.gene_names.clone(),
            regulators: s.regulator_names.clone(),
            cutoff: s.options.cutoff,
            fdr: s.fdr,
            fdr_curve: s.fdr_curve.clone(),
            edges: s.edges.clone(),
            r_squared: s.r_squared.clone(),
            tau: s.tau.clone(),
            sigma_mean: s.sigma_mean.clone(),
            negative_fraction: s.negative_fraction,
            diagnostics: s.diagnostics.clone(),
            p: rows(&s.p),
            p_prime: s.p_prime.as_ref().map(rows),
            p_dprime: s.p_dprime.as_ref().map(rows),
            beta_hat: rows(&s.beta_hat),
            ols_hat: rows(&s.ols_hat),
        }
    }
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text)?;
    written.push(path);
    Ok(())
}

/// Writes the requested formats into `outdir`, creating it if needed, and
/// returns the paths written.
pub fn export_results(s: &PosteriorSummary, formats: &[ExportFormat], outdir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(outdir)?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            ExportFormat::EdgeList => write(outdir.join("edges.tsv"), &edge_list_tsv(s), &mut written)?,
            ExportFormat::Dot => write(outdir.join("network.dot"), &network_dot(s), &mut written)?,
            ExportFormat::JsonGraph => write(outdir.join("network.json"), &network_json(s)?, &mut written)?,
            ExportFormat::Json => {
                let text = serde_json::to_string_pretty(&SummaryDocument::from_summary(s))? + "\n";
                write(outdir.join("summary.json"), &text, &mut written)?;
            }
            ExportFormat::Matrix => {
                let mats = [("p_matrix.csv", Some(&s.p)), ("p_prime.csv", s.p_prime.as_ref()), ("p_dprime.csv", s.p_dprime.as_ref())];
                for (name, m) in mats {
                    if let Some(m) = m {
                        let path = outdir.join(name);
                        write_gene_matrix(&path, &s.gene_names, &s.regulator_names, m)?;
                        written.push(path);
                    }
                }
            }
        }
    }
    Ok(written)
}
