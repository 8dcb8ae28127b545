//! Putting heterogeneous score sources on a common scale.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::types::ScoreSet;

/// Whether a larger raw value means stronger association.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ScoreOrientation {
    #[default]
    HigherIsStronger,
    /// Raw values are negated before normalization (e.g. context scores).
    LowerIsStronger,
}

/// Min-max scaling of each source over its nonzero entries, onto `[0, 1]`.
///
/// Zeros mean "no prediction" and stay zero. A source whose nonzero entries
/// are all equal maps them to 1; an all-zero source passes through.
pub fn normalize_scores(raw: &ScoreSet) -> Result<ScoreSet> {
    let mut out = Vec::with_capacity(raw.sources());
    for s in &raw.scores {
        if s.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite score"));
        }
        out.push(normalize_source(s));
    }
    ScoreSet::new(out, raw.source_names.clone())
}

fn normalize_source(s: &DMatrix<f64>) -> DMatrix<f64> {
    let nonzero = s.iter().copied().filter(|&v| v != 0.0);
    let (lo, hi) = nonzero.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return s.clone();
    }
    let span = hi - lo;
    s.map(|v| {
        if v == 0.0 {
            0.0
        } else if span == 0.0 {
            1.0
        } else {
            (v - lo) / span
        }
    })
}

/// Applies `orientation` to a raw source.
pub fn orient(s: &DMatrix<f64>, orientation: ScoreOrientation) -> DMatrix<f64> {
    match orientation {
        ScoreOrientation::HigherIsStronger => s.clone(),
        ScoreOrientation::LowerIsStronger => s.map(|v| if v == 0.0 { 0.0 } else { -v }),
    }
}
