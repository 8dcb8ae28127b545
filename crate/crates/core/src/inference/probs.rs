use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::sampler::ChainTrace;

/// Posterior inclusion probabilities (G×M).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionProbs {
    pub p: DMatrix<f64>,
    pub p_prime: Option<DMatrix<f64>>,
    pub p_dprime: Option<DMatrix<f64>>,
    pub samples: u64,
}

/// Pools the recorded samples of one or more traces.
pub fn inclusion_probs(traces: &[&ChainTrace]) -> Result<InclusionProbs> {
    let first = traces.first().ok_or_else(|| Error::EmptyTrace("no traces given".into()))?;
    let (g, m) = (first.g, first.m);
    if traces.iter().any(|t| t.g != g || t.m != m || t.mode != first.mode) {
        return Err(mismatch("traces differ in shape or mode"));
    }
    let samples: u64 = traces.iter().map(|t| t.samples).sum();
    if samples == 0 {
        return Err(Error::EmptyTrace("no post-burn-in samples".into()));
    }
    let pool = |pick: fn(&ChainTrace) -> Option<&Vec<u64>>| -> Option<DMatrix<f64>> {
        let mut total = vec![0u64; g * m];
        for t in traces {
            for (acc, c) in total.iter_mut().zip(pick(t)?) {
                *acc += c;
            }
        }
        Some(DMatrix::from_row_iterator(g, m, total.into_iter().map(|c| c as f64 / samples as f64)))
    };
    Ok(InclusionProbs {
        p: pool(|t| Some(&t.inclusion)).expect("base inclusion counts always exist"),
        p_prime: pool(|t| t.inclusion_prime.as_ref()),
        p_dprime: pool(|t| t.inclusion_dprime.as_ref()),
        samples,
    })
}
