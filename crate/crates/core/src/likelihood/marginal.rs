//! Marginal likelihood of one target with its coefficients integrated out.
//!
//! The model is `y = −(X β + X₂* β′ + X₃* β″) + ε` with `ε ~ N(0, σI)`,
//! `β_m ~ Exp(rate λ(σ))` on the selected base edges and
//! `β′, β″ ~ N(0, cζσ)` on the selected time offsets. Everything here works
//! from Gram-matrix statistics so the sampler can slice precomputed products
//! instead of touching the raw data.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::normal::LN_2PI;
use super::orthant::{log_mvn_orthant, OrthantEstimate, OrthantOptions};
use crate::error::{invalid, mismatch, Error, Result};
use crate::model::Hyperparams;

/// Gram statistics of one target and one selection.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneStats {
    pub n: usize,
    pub yty: f64,
    /// `XᵀX` over the selected base columns.
    pub g00: DMatrix<f64>,
    /// `Xᵀy` over the selected base columns.
    pub d0y: DVector<f64>,
    pub offsets: Option<OffsetStats>,
}

/// Cross products involving the padded time-block designs.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetStats {
    pub g02: DMatrix<f64>,
    pub g22: DMatrix<f64>,
    pub d2y: DVector<f64>,
    pub g03: DMatrix<f64>,
    pub g33: DMatrix<f64>,
    pub d3y: DVector<f64>,
}

impl GeneStats {
    pub fn time_invariant(y: &DVector<f64>, x_sel: &DMatrix<f64>) -> Result<Self> {
        if x_sel.nrows() != y.len() {
            return Err(mismatch(format!("design has {} rows, response {}", x_sel.nrows(), y.len())));
        }
        if y.iter().chain(x_sel.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite data"));
        }
        Ok(Self { n: y.len(), yty: y.dot(y), g00: x_sel.tr_mul(x_sel), d0y: x_sel.tr_mul(y), offsets: None })
    }

    /// `x2_sel` and `x3_sel` are padded: zero outside their time block.
    pub fn time_dependent(
        y: &DVector<f64>,
        x_sel: &DMatrix<f64>,
        x2_sel: &DMatrix<f64>,
        x3_sel: &DMatrix<f64>,
    ) -> Result<Self> {
        let mut base = Self::time_invariant(y, x_sel)?;
        let n = y.len();
        if x2_sel.nrows() != n || x3_sel.nrows() != n {
            return Err(mismatch("time-block designs must have one row per sample"));
        }
        if x2_sel.iter().chain(x3_sel.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite design entry"));
        }
        let nonzero_row = |m: &DMatrix<f64>, i: usize| m.row(i).iter().any(|&v| v != 0.0);
        if (0..n).any(|i| nonzero_row(x2_sel, i) && nonzero_row(x3_sel, i)) {
            return Err(invalid("time-block designs must have disjoint row support"));
        }
        base.offsets = Some(OffsetStats {
            g02: x_sel.tr_mul(x2_sel),
            g22: x2_sel.tr_mul(x2_sel),
            d2y: x2_sel.tr_mul(y),
            g03: x_sel.tr_mul(x3_sel),
            g33: x3_sel.tr_mul(x3_sel),
            d3y: x3_sel.tr_mul(y),
        });
        Ok(base)
    }

    pub fn k(&self) -> usize {
        self.d0y.len()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("sigma must be positive, got {sigma}")))
    }
}

/// Quantities of the time-invariant closed form.
#[derive(Debug, Clone)]
pub struct MarginalWorkspace {
    /// `(XᵀX)⁻¹`
    pub u: DMatrix<f64>,
    /// `−Xᵀy − σλ1`
    pub c: DVector<f64>,
    pub q: f64,
    pub orthant: OrthantEstimate,
    pub log_density: f64,
}

/// Quantities of the time-dependent closed form.
#[derive(Debug, Clone)]
pub struct TdWorkspace {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub f: DVector<f64>,
    pub q: f64,
    pub k2: usize,
    pub k3: usize,
    pub orthant: OrthantEstimate,
    pub log_density: f64,
}

/// Cholesky factor that refuses numerically rank-deficient input.
pub(crate) fn spd_factor(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    let chol = m.clone().cholesky().ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))?;
    let l = chol.l_dirty();
    for i in 0..m.nrows() {
        let pivot = l[(i, i)] * l[(i, i)];
        if !(pivot > 1e-10 * m[(i, i)].abs()) || !pivot.is_finite() {
            return Err(Error::Singular(format!("{what} is numerically rank deficient")));
        }
    }
    Ok(chol)
}

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    (0..l.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum()
}

fn null_log_density(n: usize, yty: f64, sigma: f64) -> f64 {
    -0.5 * n as f64 * (LN_2PI + sigma.ln()) - yty / (2.0 * sigma)
}

/// Closed-form time-invariant marginal from Gram statistics.
pub fn marginal_ti(stats: &GeneStats, sigma: f64, hp: &Hyperparams, opts: &OrthantOptions) -> Result<MarginalWorkspace> {
    check_sigma(sigma)?;
    let k = stats.k();
    let lambda = hp.beta_prior.rate(hp.c, sigma);
    let chol = spd_factor(&stats.g00, "X_selᵀX_sel")?;
    let u = chol.inverse();
    let c = -&stats.d0y - DVector::from_element(k, sigma * lambda);
    let uc = chol.solve(&c);
    let q = stats.yty - c.dot(&uc);
    let orthant = log_mvn_orthant(&(-&uc), &(&u * sigma), opts)?;
    let nk = (stats.n - k) as f64;
    let log_density = -0.5 * nk * (LN_2PI + sigma.ln()) + k as f64 * lambda.ln() - 0.5 * log_det(&chol)
        - q / (2.0 * sigma)
        + orthant.log_prob;
    Ok(MarginalWorkspace { u, c, q, orthant, log_density })
}

/// Closed-form time-dependent marginal from Gram statistics.
pub fn marginal_td(stats: &GeneStats, sigma: f64, hp: &Hyperparams, opts: &OrthantOptions) -> Result<TdWorkspace> {
    check_sigma(sigma)?;
    let off = stats.offsets.as_ref().ok_or_else(|| invalid("time-dependent marginal needs offset statistics"))?;
    let k = stats.k();
    let (k2, k3) = (off.d2y.len(), off.d3y.len());
    let lambda = hp.beta_prior.rate(hp.c, sigma);
    let ridge = 1.0 / (hp.c * hp.zeta);
    let a = &off.g22 + DMatrix::identity(k2, k2) * ridge;
    let cm = &off.g33 + DMatrix::identity(k3, k3) * ridge;
    let chol_a = spd_factor(&a, "A")?;
    let chol_c = spd_factor(&cm, "C")?;
    // A⁻¹D₂ᵀD₀ and C⁻¹D₃ᵀD₀, and the matching response terms
    let a_g20 = chol_a.solve(&off.g02.transpose());
    let c_g30 = chol_c.solve(&off.g03.transpose());
    let a_d2y = chol_a.solve(&off.d2y);
    let c_d3y = chol_c.solve(&off.d3y);
    let e = &stats.g00 - &off.g02 * &a_g20 - &off.g03 * &c_g30;
    let e = (&e + e.transpose()) * 0.5;
    let f = -&stats.d0y + &off.g03 * &c_d3y + &off.g02 * &a_d2y - DVector::from_element(k, sigma * lambda);
    let chol_e = spd_factor(&e, "E")?;
    let e_f = chol_e.solve(&f);
    let q = stats.yty - off.d2y.dot(&a_d2y) - off.d3y.dot(&c_d3y) - f.dot(&e_f);
    let orthant = log_mvn_orthant(&(-&e_f), &(chol_e.inverse() * sigma), opts)?;
    let nk = (stats.n - k) as f64;
    let log_density = -0.5 * nk * (LN_2PI + sigma.ln()) + k as f64 * lambda.ln()
        - 0.5 * (k2 + k3) as f64 * (hp.c * hp.zeta).ln()
        - 0.5 * (log_det(&chol_a) + log_det(&chol_c) + log_det(&chol_e))
        - q / (2.0 * sigma)
        + orthant.log_prob;
    Ok(TdWorkspace { a, c: cm, e, f, q, k2, k3, orthant, log_density })
}

/// Log marginal for either mode, dispatching on whether offsets are present.
pub fn log_marginal(stats: &GeneStats, sigma: f64, hp: &Hyperparams, opts: &OrthantOptions) -> Result<f64> {
    if stats.k() == 0 && stats.offsets.as_ref().is_none_or(|o| o.d2y.is_empty() && o.d3y.is_empty()) {
        check_sigma(sigma)?;
        return Ok(null_log_density(stats.n, stats.yty, sigma));
    }
    match stats.offsets {
        None => Ok(marginal_ti(stats, sigma, hp, opts)?.log_density),
        Some(_) => Ok(marginal_td(stats, sigma, hp, opts)?.log_density),
    }
}

/// `ln f(y | X_sel, σ)` for the time-invariant model.
pub fn log_marginal_ti(y: &DVector<f64>, x_sel: &DMatrix<f64>, sigma: f64, hp: &Hyperparams) -> Result<f64> {
    let stats = GeneStats::time_invariant(y, x_sel)?;
    Ok(marginal_ti(&stats, sigma, hp, &OrthantOptions::default())?.log_density)
}

/// `ln f(y | X_sel, X₂*_sel, X₃*_sel, σ)` for the time-dependent model.
pub fn log_marginal_td(
    y: &DVector<f64>,
    x_sel: &DMatrix<f64>,
    x2_sel: &DMatrix<f64>,
    x3_sel: &DMatrix<f64>,
    sigma: f64,
    hp: &Hyperparams,
) -> Result<f64> {
    let stats = GeneStats::time_dependent(y, x_sel, x2_sel, x3_sel)?;
    Ok(marginal_td(&stats, sigma, hp, &OrthantOptions::default())?.log_density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoefficientPrior;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn null_model_is_gaussian() {
        let y = DVector::from_vec(vec![0.5, -1.0, 0.5]);
        let hp = Hyperparams::default();
        let v = log_marginal_ti(&y, &DMatrix::zeros(3, 0), 0.7, &hp).unwrap();
        let expect = -1.5 * (2.0 * std::f64::consts::PI * 0.7).ln() - y.dot(&y) / 1.4;
        assert!((v - expect).abs() < 1e-13);
        let td = log_marginal_td(&y, &DMatrix::zeros(3, 0), &DMatrix::zeros(3, 0), &DMatrix::zeros(3, 0), 0.7, &hp);
        assert!((td.unwrap() - expect).abs() < 1e-13);
    }

    #[test]
    fn rank_deficient_design_is_singular() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, -1.0, -2.0]);
        let y = DVector::from_vec(vec![1.0, 0.0, -1.0]);
        let r = log_marginal_ti(&y, &x, 1.0, &Hyperparams::default());
        assert!(matches!(r, Err(Error::Singular(_))));
    }

    #[test]
    fn column_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = randn(&mut rng, 8, 3);
        let y = randn(&mut rng, 8, 1).column(0).into_owned();
        let hp = Hyperparams::default();
        let a = log_marginal_ti(&y, &x, 0.8, &hp).unwrap();
        let b = log_marginal_ti(&y, &x.select_columns(&[2, 0, 1]), 0.8, &hp).unwrap();
        // k = 3 goes through the lattice rule; reordering changes its variable order
        assert!((a - b).abs() < 5e-3, "{a} {b}");
        let x2 = x.columns(0, 2).into_owned();
        let c = log_marginal_ti(&y, &x2, 0.8, &hp).unwrap();
        let d = log_marginal_ti(&y, &x2.select_columns(&[1, 0]), 0.8, &hp).unwrap();
        assert!((c - d).abs() < 1e-12);
    }

    #[test]
    fn prior_flag_changes_the_rate() {
        let hp = Hyperparams { beta_prior: CoefficientPrior::GammaRate, ..Hyperparams::default() };
        assert_eq!(hp.beta_prior.rate(0.7, 2.0), 1.4);
        assert!((CoefficientPrior::ScaledExponential.rate(0.7, 4.0) - 1.0 / 1.4).abs() < 1e-15);
    }

    #[test]
    fn overlapping_time_blocks_rejected() {
        let y = DVector::from_vec(vec![1.0, -1.0, 0.0]);
        let x = DMatrix::from_vec(3, 1, vec![1.0, 2.0, 3.0]);
        let x2 = DMatrix::from_vec(3, 1, vec![0.0, 2.0, 0.0]);
        let x3 = DMatrix::from_vec(3, 1, vec![0.0, 1.0, 3.0]);
        assert!(log_marginal_td(&y, &x, &x2, &x3, 1.0, &Hyperparams::default()).is_err());
    }
}
