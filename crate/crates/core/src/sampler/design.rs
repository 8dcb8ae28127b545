//! Precomputed cross products shared by every likelihood evaluation.

use nalgebra::{DMatrix, DVector};

use super::config::Mode;
use crate::error::{invalid, Error, Result};
use crate::likelihood::marginal::{log_marginal, GeneStats, OffsetStats};
use crate::likelihood::orthant::OrthantOptions;
use crate::model::{ExpressionData, Hyperparams, NetworkState};

/// Gram matrices of the full data; per-target statistics are sliced from these.
#[derive(Debug, Clone)]
pub struct Design {
    pub n: usize,
    pub g: usize,
    pub m: usize,
    xtx: DMatrix<f64>,
    xty: DMatrix<f64>,
    yty: Vec<f64>,
    blocks: Option<BlockGrams>,
}

#[derive(Debug, Clone)]
struct BlockGrams {
    x2tx2: DMatrix<f64>,
    x3tx3: DMatrix<f64>,
    x2ty: DMatrix<f64>,
    x3ty: DMatrix<f64>,
}

fn sub(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn col(m: &DMatrix<f64>, rows: &[usize], c: usize) -> DVector<f64> {
    DVector::from_iterator(rows.len(), rows.iter().map(|&r| m[(r, c)]))
}

impl Design {
    pub fn new(data: &ExpressionData, mode: Mode) -> Result<Self> {
        let blocks = match mode {
            Mode::TimeInvariant => None,
            Mode::TimeDependent => {
                let (b2, b3) = data.time_blocks()?;
                if b2.is_empty() && b3.is_empty() {
                    return Err(invalid("time-dependent mode needs samples labelled 2 or 3"));
                }
                let x2 = data.padded_x(&b2);
                let x3 = data.padded_x(&b3);
                Some(BlockGrams {
                    x2tx2: x2.tr_mul(&x2),
                    x3tx3: x3.tr_mul(&x3),
                    x2ty: x2.tr_mul(&data.y),
                    x3ty: x3.tr_mul(&data.y),
                })
            }
        };
        Ok(Self {
            n: data.n(),
            g: data.g(),
            m: data.m(),
            xtx: data.x.tr_mul(&data.x),
            xty: data.x.tr_mul(&data.y),
            yty: data.y.column_iter().map(|c| c.norm_squared()).collect(),
            blocks,
        })
    }

    pub fn time_dependent(&self) -> bool {
        self.blocks.is_some()
    }

    pub fn yty(&self, g: usize) -> f64 {
        self.yty[g]
    }

    /// Statistics of target `g` under the current selection.
    pub fn gene_stats(&self, net: &NetworkState, g: usize) -> GeneStats {
        let s0 = net.r.row_ones(g);
        let offsets = self.blocks.as_ref().map(|b| {
            let s2 = net.r_prime.as_ref().map(|r| r.row_ones(g)).unwrap_or_default();
            let s3 = net.r_dprime.as_ref().map(|r| r.row_ones(g)).unwrap_or_default();
            OffsetStats {
                g02: sub(&b.x2tx2, &s0, &s2),
                g22: sub(&b.x2tx2, &s2, &s2),
                d2y: col(&b.x2ty, &s2, g),
                g03: sub(&b.x3tx3, &s0, &s3),
                g33: sub(&b.x3tx3, &s3, &s3),
                d3y: col(&b.x3ty, &s3, g),
            }
        });
        GeneStats { n: self.n, yty: self.yty[g], g00: sub(&self.xtx, &s0, &s0), d0y: col(&self.xty, &s0, g), offsets }
    }

    /// Log marginal likelihood of target `g`; rank-deficient selections score `−∞`.
    pub fn log_lik(
        &self,
        net: &NetworkState,
        g: usize,
        sigma: f64,
        hp: &Hyperparams,
        opts: &OrthantOptions,
    ) -> Result<f64> {
        match log_marginal(&self.gene_stats(net, g), sigma, hp, opts) {
            Err(Error::Singular(_)) => Ok(f64::NEG_INFINITY),
            other => other,
        }
    }
}
