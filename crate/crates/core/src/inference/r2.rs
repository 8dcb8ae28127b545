use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Result};
use crate::model::ExpressionData;

/// Per-target and pooled coefficient of determination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSquared {
    /// `None` for targets with zero variance.
    pub per_gene: Vec<Option<f64>>,
    pub aggregate: f64,
    pub excluded: Vec<usize>,
}

/// `1 − RSS/TSS` with fitted values `X b` (plus the offsets on their blocks).
///
/// Coefficients are in the reporting convention `y ≈ X b`.
pub fn r_squared(
    data: &ExpressionData,
    beta: &DMatrix<f64>,
    beta_prime: Option<&DMatrix<f64>>,
    beta_dprime: Option<&DMatrix<f64>>,
) -> Result<RSquared> {
    let shape = (data.g(), data.m());
    if [Some(beta), beta_prime, beta_dprime].into_iter().flatten().any(|b| b.shape() != shape) {
        return Err(mismatch("coefficient matrices must be G×M"));
    }
    let n = data.n();
    let mut per_gene = Vec::with_capacity(data.g());
    let mut excluded = Vec::new();
    let (mut rss_total, mut tss_total) = (0.0, 0.0);
    for g in 0..data.g() {
        let y = data.y.column(g);
        let mean = y.mean();
        let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
        if tss <= 0.0 {
            log::warn!("target {} has zero variance and is left out of R²", data.gene_names[g]);
            excluded.push(g);
            per_gene.push(None);
            continue;
        }
        let mut rss = 0.0;
        for i in 0..n {
            let xi = data.x.row(i);
            let mut fit = xi.dot(&beta.row(g));
            match data.time_labels[i] {
                2 => fit += beta_prime.map_or(0.0, |b| xi.dot(&b.row(g))),
                3 => fit += beta_dprime.map_or(0.0, |b| xi.dot(&b.row(g))),
                _ => {}
            }
            rss += (y[i] - fit) * (y[i] - fit);
        }
        rss_total += rss;
        tss_total += tss;
        per_gene.push(Some(1.0 - rss / tss));
    }
    let aggregate = if tss_total > 0.0 { 1.0 - rss_total / tss_total } else { f64::NAN };
    Ok(RSquared { per_gene, aggregate, excluded })
}
