//! Cross-chain agreement and recovery metrics.

use nalgebra::DMatrix;

use crate::error::{mismatch, Error, Result};
use crate::model::Indicator;

/// Pearson correlation between two inclusion-probability matrices.
pub fn chain_agreement(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(mismatch("probability matrices differ in shape"));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.sum() / n, b.sum() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("a probability matrix is constant".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Area under the ROC curve of `scores` against `truth` (ties count one half).
pub fn auc(scores: &DMatrix<f64>, truth: &Indicator) -> Result<f64> {
    if scores.shape() != (truth.rows(), truth.cols()) {
        return Err(mismatch("scores and truth differ in shape"));
    }
    let mut pairs: Vec<(f64, bool)> =
        (0..truth.rows()).flat_map(|g| (0..truth.cols()).map(move |m| (g, m))).map(|(g, m)| (scores[(g, m)], truth.get(g, m))).collect();
    let pos = pairs.iter().filter(|p| p.1).count();
    let neg = pairs.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedCorrelation("AUC needs both positive and negative cells".into()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Mann–Whitney: sum of midranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            j += 1;
        }
        let mid = 0.5 * ((i + 1) + j) as f64;
        rank_sum += mid * pairs[i..j].iter().filter(|p| p.1).count() as f64;
        i = j;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_matrices_agree_perfectly() {
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 0.9, 0.4, 0.2]);
        assert!((chain_agreement(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!(chain_agreement(&a, &DMatrix::from_element(2, 2, 0.5)).is_err());
    }

    #[test]
    fn auc_extremes_and_ties() {
        let truth = Indicator::from_fn(1, 4, |_, m| m < 2);
        let perfect = DMatrix::from_row_slice(1, 4, &[0.9, 0.8, 0.1, 0.2]);
        assert_eq!(auc(&perfect, &truth).unwrap(), 1.0);
        let flat = DMatrix::from_element(1, 4, 0.5);
        assert_eq!(auc(&flat, &truth).unwrap(), 0.5);
    }
}
