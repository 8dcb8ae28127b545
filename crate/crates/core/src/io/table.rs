//! Labelled numeric tables in CSV form.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// A cell that may be missing.
pub type Cell = Option<f64>;

/// Rows keyed by an identifier, columns by name, plus optional time labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub ids: Vec<String>,
    pub times: Option<Vec<u8>>,
    pub columns: Vec<String>,
    /// Row-major cells.
    pub cells: Vec<Vec<Cell>>,
}

fn parse_cell(raw: &str, row: &str, col: &str) -> Result<Cell> {
    let t = raw.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Some)
        .ok_or_else(|| Error::Parse(format!("non-numeric value {t:?} at row {row:?}, column {col:?}")))
}

/// Reads a CSV whose first column is an identifier and, if `with_time`,
/// whose second column is a time label in 1..=3.
pub fn read_table(path: &Path, with_time: bool) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = rdr.headers()?.clone();
    let skip = if with_time { 2 } else { 1 };
    if header.len() < skip {
        return Err(Error::Parse(format!("{}: header is too short", path.display())));
    }
    let columns: Vec<String> = header.iter().skip(skip).map(str::to_owned).collect();
    check_unique(&columns, "column", path)?;
    let mut ids = Vec::new();
    let mut times = Vec::new();
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default().to_owned();
        if with_time {
            let raw = rec.get(1).unwrap_or_default();
            let t: u8 = raw
                .parse()
                .ok()
                .filter(|t| (1..=3).contains(t))
                .ok_or_else(|| Error::Parse(format!("sample {id:?}: time label {raw:?} is not 1, 2 or 3")))?;
            times.push(t);
        }
        let row = rec.iter().skip(skip).zip(&columns).map(|(v, c)| parse_cell(v, &id, c)).collect::<Result<Vec<_>>>()?;
        ids.push(id);
        cells.push(row);
    }
    check_unique(&ids, "row id", path)?;
    Ok(Table { ids, times: with_time.then_some(times), columns, cells })
}

fn check_unique(names: &[String], what: &str, path: &Path) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    match names.iter().find(|n| !seen.insert(n.as_str())) {
        Some(dup) => Err(invalid(format!("{}: duplicate {what} {dup:?}", path.display()))),
        None => Ok(()),
    }
}

/// Writes an id-keyed matrix with an optional time column. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_table(
    path: &Path,
    id_header: &str,
    ids: &[String],
    times: Option<&[u8]>,
    columns: &[String],
    values: &DMatrix<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut head = vec![id_header.to_owned()];
    if times.is_some() {
        head.push("time".into());
    }
    head.extend(columns.iter().cloned());
    w.write_record(&head)?;
    for (i, id) in ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        if let Some(t) = times {
            rec.push(t[i].to_string());
        }
        rec.extend(values.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
