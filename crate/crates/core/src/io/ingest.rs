//! Reading expression matrices and association scores from CSV.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::table::{read_table, write_table, Table};
use crate::error::{invalid, mismatch, Error, Result};
use crate::model::{center_columns, normalize_scores, scores::orient, ExpressionData, ScoreOrientation, ScoreSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub log2_targets: bool,
    pub log2_regulators: bool,
    /// Center regulator columns as well as targets.
    pub center_regulators: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { log2_targets: false, log2_regulators: false, center_regulators: true }
    }
}

/// A variable left out during ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excluded {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub genes: Vec<Excluded>,
    pub regulators: Vec<Excluded>,
}

impl ExclusionReport {
    pub fn is_empty(&self) -> bool {
        self.genes.is_empty() && self.regulators.is_empty()
    }
}

/// Keeps complete columns (and, under `log2`, strictly positive ones),
/// transformed. Rows follow `order`.
fn clean_columns(t: &Table, order: &[usize], log2: bool, dropped: &mut Vec<Excluded>) -> (DMatrix<f64>, Vec<String>) {
    let mut kept = Vec::new();
    let mut names = Vec::new();
    for (j, name) in t.columns.iter().enumerate() {
        let col: Option<Vec<f64>> = order.iter().map(|&i| t.cells[i][j]).collect();
        let reason = match &col {
            None => Some("missing value"),
            Some(v) if log2 && v.iter().any(|&x| x <= 0.0) => Some("non-positive value under log2"),
            _ => None,
        };
        if let Some(reason) = reason {
            dropped.push(Excluded { name: name.clone(), reason: reason.into() });
            continue;
        }
        let v = col.expect("checked above");
        kept.push(if log2 { v.into_iter().map(f64::log2).collect() } else { v });
        names.push(name.clone());
    }
    let n = order.len();
    let m = DMatrix::from_fn(n, kept.len(), |i, j| kept[j][i]);
    (m, names)
}

/// Reads targets from `y_path` and regulators from `x_path`, each laid out as
/// `sample_id,time,<variables...>`, and joins them on sample id.
///
/// Samples are stably sorted by time label. Targets are always centered.
pub fn ingest_expression(y_path: &Path, x_path: &Path, opts: &IngestOptions) -> Result<(ExpressionData, ExclusionReport)> {
    let ty = read_table(y_path, true)?;
    let tx = read_table(x_path, true)?;
    let x_row: HashMap<&str, usize> = tx.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    if let Some(id) = ty.ids.iter().find(|id| !x_row.contains_key(id.as_str())) {
        return Err(invalid(format!("sample {id:?} has targets but no regulators")));
    }
    if tx.ids.len() != ty.ids.len() {
        let y_ids: std::collections::HashSet<&str> = ty.ids.iter().map(String::as_str).collect();
        let id = tx.ids.iter().find(|id| !y_ids.contains(id.as_str())).expect("sizes differ");
        return Err(invalid(format!("sample {id:?} has regulators but no targets")));
    }
    let y_times = ty.times.as_ref().expect("read with time column");
    let x_times = tx.times.as_ref().expect("read with time column");
    for (i, id) in ty.ids.iter().enumerate() {
        if x_times[x_row[id.as_str()]] != y_times[i] {
            return Err(invalid(format!("sample {id:?} has different time labels in the two files")));
        }
    }
    let mut order: Vec<usize> = (0..ty.ids.len()).collect();
    order.sort_by_key(|&i| y_times[i]);
    let x_order: Vec<usize> = order.iter().map(|&i| x_row[ty.ids[i].as_str()]).collect();

    let mut report = ExclusionReport::default();
    let (y, genes) = clean_columns(&ty, &order, opts.log2_targets, &mut report.genes);
    let (mut x, regs) = clean_columns(&tx, &x_order, opts.log2_regulators, &mut report.regulators);
    if genes.is_empty() || regs.is_empty() {
        return Err(invalid("no complete target or regulator columns remain"));
    }
    for e in report.genes.iter().chain(&report.regulators) {
        log::warn!("excluding {}: {}", e.name, e.reason);
    }
    if opts.center_regulators {
        center_columns(&mut x);
    }
    let times = order.iter().map(|&i| y_times[i]).collect();
    let ids = order.iter().map(|&i| ty.ids[i].clone()).collect();
    let data = ExpressionData::new(y, x, times, ids, genes, regs)?;
    Ok((data, report))
}

/// Writes `data` in the layout [`ingest_expression`] reads.
pub fn write_expression(y_path: &Path, x_path: &Path, data: &ExpressionData) -> Result<()> {
    let times = Some(data.time_labels.as_slice());
    write_table(y_path, "sample_id", &data.sample_ids, times, &data.gene_names, &data.y)?;
    write_table(x_path, "sample_id", &data.sample_ids, times, &data.regulator_names, &data.x)
}

/// Reads a `target,<regulators...>` matrix aligned to the given names.
/// Rows or cells that are absent count as zero; unknown names are errors.
pub fn read_gene_matrix(path: &Path, genes: &[String], regulators: &[String]) -> Result<DMatrix<f64>> {
    let t = read_table(path, false)?;
    let g_index: HashMap<&str, usize> = genes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let m_index: HashMap<&str, usize> = regulators.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let cols = t
        .columns
        .iter()
        .map(|c| m_index.get(c.as_str()).copied().ok_or_else(|| invalid(format!("{}: unknown regulator {c:?}", path.display()))))
        .collect::<Result<Vec<_>>>()?;
    let mut out = DMatrix::zeros(genes.len(), regulators.len());
    for (id, row) in t.ids.iter().zip(&t.cells) {
        let g = *g_index.get(id.as_str()).ok_or_else(|| invalid(format!("{}: unknown target {id:?}", path.display())))?;
        for (&m, v) in cols.iter().zip(row) {
            out[(g, m)] = v.unwrap_or(0.0);
        }
    }
    Ok(out)
}

/// Writes a G×M matrix in the layout [`read_gene_matrix`] reads.
pub fn write_gene_matrix(path: &Path, genes: &[String], regulators: &[String], values: &DMatrix<f64>) -> Result<()> {
    if values.shape() != (genes.len(), regulators.len()) {
        return Err(mismatch("matrix shape does not match the name lists"));
    }
    write_table(path, "target", genes, None, regulators, values)
}

/// One score file and how to read its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSource {
    pub path: PathBuf,
    pub orientation: ScoreOrientation,
}

impl ScoreSource {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into(), orientation: ScoreOrientation::HigherIsStronger }
    }

    /// File stem, used as the source name.
    pub fn name(&self) -> String {
        self.path.file_stem().map_or_else(|| "scores".into(), |s| s.to_string_lossy().into_owned())
    }
}

/// Reads, orients, validates and normalizes every source.
pub fn ingest_scores(sources: &[ScoreSource], data: &ExpressionData) -> Result<ScoreSet> {
    let mut mats = Vec::with_capacity(sources.len());
    for src in sources {
        let raw = read_gene_matrix(&src.path, &data.gene_names, &data.regulator_names)?;
        let oriented = orient(&raw, src.orientation);
        if let Some(pos) = oriented.iter().position(|&v| v < 0.0) {
            let (g, m) = (pos % oriented.nrows(), pos / oriented.nrows());
            return Err(Error::InvalidInput(format!(
                "{}: negative score for ({}, {}) after orientation",
                src.path.display(),
                data.gene_names[g],
                data.regulator_names[m]
            )));
        }
        mats.push(oriented);
    }
    normalize_scores(&ScoreSet::new(mats, sources.iter().map(ScoreSource::name).collect())?)
}
