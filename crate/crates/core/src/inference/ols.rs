//! Unconstrained least-squares fits on a fixed network.
//!
//! These regress `y` on the selected regulators with no sign flip and no
//! positivity, which is what makes the negativity diagnostic meaningful.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, mismatch, Error, Result};
use crate::likelihood::marginal::spd_factor;
use crate::model::{ExpressionData, Matrix, NetworkState};

#[derive(Debug, Clone, PartialEq)]
pub struct OlsEstimates {
    pub beta: DMatrix<f64>,
    pub beta_prime: Option<DMatrix<f64>>,
    pub beta_dprime: Option<DMatrix<f64>>,
    /// Targets whose fit was singular, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// `(XᵀX)⁻¹Xᵀy`.
pub fn ols_ti(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<DVector<f64>> {
    if x.nrows() != y.len() {
        return Err(mismatch("design and response differ in length"));
    }
    let ch = spd_factor(&x.tr_mul(x), "XᵀX")?;
    Ok(ch.solve(&x.tr_mul(y)))
}

/// Joint fit of `y = D₀β + D₂β′ + D₃β″` through the reduced system `Kβ = …`.
///
/// `d2` and `d3` are padded time-block designs with disjoint row support.
pub fn ols_td_closed(
    y: &DVector<f64>,
    d0: &DMatrix<f64>,
    d2: &DMatrix<f64>,
    d3: &DMatrix<f64>,
) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let n = y.len();
    if d0.nrows() != n || d2.nrows() != n || d3.nrows() != n {
        return Err(mismatch("designs and response differ in length"));
    }
    // hat-like operators D_i (D_iᵀD_i)⁻¹ D_iᵀ, kept in factored form
    let pinv = |d: &DMatrix<f64>, name: &str| -> Result<DMatrix<f64>> {
        if d.ncols() == 0 {
            return Ok(DMatrix::zeros(0, n));
        }
        Ok(spd_factor(&d.tr_mul(d), name)?.solve(&d.transpose()))
    };
    let p2 = pinv(d2, "D₂ᵀD₂")?;
    let p3 = pinv(d3, "D₃ᵀD₃")?;
    let proj = d2 * &p2 + d3 * &p3;
    let beta = if d0.ncols() == 0 {
        DVector::zeros(0)
    } else {
        let g0 = spd_factor(&d0.tr_mul(d0), "D₀ᵀD₀")?;
        let k = DMatrix::identity(d0.ncols(), d0.ncols()) - g0.solve(&(d0.transpose() * &proj * d0));
        let rhs = g0.solve(&d0.tr_mul(y)) - g0.solve(&(d0.transpose() * (&proj * y)));
        k.lu().solve(&rhs).ok_or_else(|| Error::Singular("K is not invertible".into()))?
    };
    let resid = y - d0 * &beta;
    Ok((beta, &p2 * &resid, &p3 * &resid))
}

/// The same joint fit by a QR solve of the stacked design `[D₀ D₂ D₃]`.
pub fn ols_td_stacked(
    y: &DVector<f64>,
    d0: &DMatrix<f64>,
    d2: &DMatrix<f64>,
    d3: &DMatrix<f64>,
) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let (k0, k2, k3) = (d0.ncols(), d2.ncols(), d3.ncols());
    let p = k0 + k2 + k3;
    if y.len() < p {
        return Err(Error::Singular("more coefficients than samples".into()));
    }
    let mut a = DMatrix::zeros(y.len(), p);
    a.columns_mut(0, k0).copy_from(d0);
    a.columns_mut(k0, k2).copy_from(d2);
    a.columns_mut(k0 + k2, k3).copy_from(d3);
    let qr = a.clone().qr();
    let r = qr.r();
    let scale = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if (0..p).any(|i| r[(i, i)].abs() <= 1e-12 * scale) {
        return Err(Error::Singular("stacked design is rank deficient".into()));
    }
    let qty = qr.q().tr_mul(y);
    let x = r.solve_upper_triangular(&qty).ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    Ok((x.rows(0, k0).into_owned(), x.rows(k0, k2).into_owned(), x.rows(k0 + k2, k3).into_owned()))
}

/// Least-squares coefficients for every target on `net`.
pub fn ols_estimates(data: &ExpressionData, net: &NetworkState) -> Result<OlsEstimates> {
    let (g_count, m) = (data.g(), data.m());
    if net.g() != g_count || net.m() != m {
        return Err(mismatch("network does not match the data"));
    }
    let td = net.is_time_dependent();
    let blocks = if td { Some(data.time_blocks()?) } else { None };
    let padded = blocks.as_ref().map(|(b2, b3)| (data.padded_x(b2), data.padded_x(b3)));
    let mut out = OlsEstimates {
        beta: DMatrix::zeros(g_count, m),
        beta_prime: td.then(|| DMatrix::zeros(g_count, m)),
        beta_dprime: td.then(|| DMatrix::zeros(g_count, m)),
        skipped: Vec::new(),
    };
    for g in 0..g_count {
        let y = data.y_column(g);
        let s0 = net.r.row_ones(g);
        let d0 = data.x_columns(&s0);
        let fit = match &padded {
            None => ols_ti(&y, &d0).map(|b| (b, DVector::zeros(0), DVector::zeros(0))),
            Some((x2, x3)) => {
                let s2 = net.matrix(Matrix::Rp).row_ones(g);
                let s3 = net.matrix(Matrix::Rpp).row_ones(g);
                ols_td_closed(&y, &d0, &x2.select_columns(&s2), &x3.select_columns(&s3))
            }
        };
        match fit {
            Ok((b, b2, b3)) => {
                for (i, &mi) in s0.iter().enumerate() {
                    out.beta[(g, mi)] = b[i];
                }
                if let (Some(p), Some(pp)) = (out.beta_prime.as_mut(), out.beta_dprime.as_mut()) {
                    for (i, mi) in net.matrix(Matrix::Rp).row_ones(g).into_iter().enumerate() {
                        p[(g, mi)] = b2[i];
                    }
                    for (i, mi) in net.matrix(Matrix::Rpp).row_ones(g).into_iter().enumerate() {
                        pp[(g, mi)] = b3[i];
                    }
                }
            }
            Err(Error::Singular(msg)) => out.skipped.push((g, msg)),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Fraction of fitted base coefficients that are negative, over `cells`.
pub fn negative_fraction(ols: &OlsEstimates, cells: &[(usize, usize)]) -> Result<f64> {
    let skipped: Vec<usize> = ols.skipped.iter().map(|s| s.0).collect();
    let used: Vec<f64> = cells.iter().filter(|(g, _)| !skipped.contains(g)).map(|&(g, m)| ols.beta[(g, m)]).collect();
    if used.is_empty() {
        return Err(invalid("no fitted coefficients to inspect"));
    }
    Ok(used.iter().filter(|&&b| b < 0.0).count() as f64 / used.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_recovers_coefficient() {
        let x = DMatrix::from_vec(4, 1, vec![1.0, -2.0, 0.5, 3.0]);
        let y = x.column(0) * -2.0;
        let b = ols_ti(&y, &x).unwrap();
        assert!((b[0] + 2.0).abs() < 1e-14);
    }
}
