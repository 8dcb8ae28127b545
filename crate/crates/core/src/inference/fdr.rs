//! Bayesian false discovery rate and thresholded edge calls.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdrResult {
    pub fdr: f64,
    pub selected: usize,
}

impl FdrResult {
    /// Nothing passed the cutoff; the FDR of an empty call set is reported as 0.
    pub fn is_empty(&self) -> bool {
        self.selected == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdrPoint {
    pub cutoff: f64,
    pub selected: usize,
    pub fdr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCall {
    pub g: usize,
    pub m: usize,
    pub p: f64,
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if cutoff > 0.0 && cutoff <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("cutoff must lie in (0, 1], got {cutoff}")))
    }
}

/// Exactly rounded floating-point sum (Shewchuk's partials algorithm).
pub(crate) fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    // Sum from the top, correcting the final rounding as in Python's fsum.
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// Mean of `ψ = 1 − P` over the edges with `ψ <= 1 − cutoff`.
///
/// The sum is computed exactly, so the only roundings are `1 − P` and the final division.
pub fn bayesian_fdr(p: &DMatrix<f64>, cutoff: f64) -> Result<FdrResult> {
    check_cutoff(cutoff)?;
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(invalid("probabilities must lie in [0, 1]"));
    }
    let kappa = 1.0 - cutoff;
    let psi: Vec<f64> = p.iter().map(|&v| 1.0 - v).filter(|&psi| psi <= kappa).collect();
    if psi.is_empty() {
        return Ok(FdrResult { fdr: 0.0, selected: 0 });
    }
    let n = psi.len();
    Ok(FdrResult { fdr: exact_sum(psi) / n as f64, selected: n })
}

pub fn fdr_curve(p: &DMatrix<f64>, cutoffs: &[f64]) -> Result<Vec<FdrPoint>> {
    cutoffs
        .iter()
        .map(|&c| bayesian_fdr(p, c).map(|r| FdrPoint { cutoff: c, selected: r.selected, fdr: r.fdr }))
        .collect()
}

/// Edges with `P >= cutoff`, strongest first, ties broken by `(g, m)`.
pub fn select_edges(p: &DMatrix<f64>, cutoff: f64) -> Result<Vec<EdgeCall>> {
    check_cutoff(cutoff)?;
    let mut out: Vec<EdgeCall> = (0..p.nrows())
        .flat_map(|g| (0..p.ncols()).map(move |m| (g, m)))
        .filter(|&(g, m)| p[(g, m)] >= cutoff)
        .map(|(g, m)| EdgeCall { g, m, p: p[(g, m)] })
        .collect();
    out.sort_by(|a, b| b.p.total_cmp(&a.p).then(a.g.cmp(&b.g)).then(a.m.cmp(&b.m)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        let p = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.3]);
        assert_eq!(bayesian_fdr(&p, 0.8).unwrap(), FdrResult { fdr: 0.0, selected: 2 });
        let p = DMatrix::from_row_slice(1, 3, &[0.9, 0.8, 0.3]);
        let r = bayesian_fdr(&p, 0.8).unwrap();
        assert_eq!(r.selected, 2);
        assert!((r.fdr - 0.15).abs() < 1e-15);
        let none = bayesian_fdr(&DMatrix::from_element(2, 2, 0.1), 0.5).unwrap();
        assert!(none.is_empty() && none.fdr == 0.0);
        assert!(bayesian_fdr(&p, 0.0).is_err());
        assert!(bayesian_fdr(&p, 1.5).is_err());
    }

    #[test]
    fn exact_sum_beats_naive_summation() {
        assert_eq!(exact_sum([0.1; 10]), 1.0);
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum([]), 0.0);
    }

    #[test]
    fn selection_order_is_deterministic() {
        let p = DMatrix::from_row_slice(2, 2, &[0.9, 0.95, 0.9, 0.1]);
        let e = select_edges(&p, 0.9).unwrap();
        let order: Vec<(usize, usize)> = e.iter().map(|c| (c.g, c.m)).collect();
        assert_eq!(order, vec![(0, 1), (0, 0), (1, 0)]);
    }
}
