//! Posterior means of the regression coefficients given a fixed network.
//!
//! Base coefficients follow a normal distribution truncated to the positive
//! orthant; their mean is estimated by Gibbs sampling with a batch-means
//! standard error. Time offsets use the Gaussian closed form, which ignores
//! the truncation of the base coefficients.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Error, Result};
use crate::likelihood::marginal::{spd_factor, GeneStats};
use crate::model::{Hyperparams, Matrix, NetworkState};
use crate::sampler::{mix_seed, Design};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefOptions {
    /// Target Monte Carlo standard error per coordinate.
    pub max_se: f64,
    pub min_draws: usize,
    pub max_draws: usize,
    pub seed: u64,
}

impl Default for CoefOptions {
    fn default() -> Self {
        Self { max_se: 1e-3, min_draws: 20_000, max_draws: 4_000_000, seed: 0x636f_6566 }
    }
}

/// Monte Carlo estimate of a truncated-normal mean.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedMean {
    pub mean: DVector<f64>,
    pub se: DVector<f64>,
    pub draws: usize,
}

/// One draw of `Z ~ N(0, 1)` conditioned on `Z > a`.
fn std_normal_above<R: Rng>(a: f64, rng: &mut R) -> f64 {
    if a < 0.5 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z > a {
                return z;
            }
        }
    }
    // exponential proposal with the optimal rate
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let z = a + rng.sample::<f64, _>(Exp1) / alpha;
        let u: f64 = rng.random();
        if u.ln() <= -0.5 * (z - alpha) * (z - alpha) {
            return z;
        }
    }
}

const BATCHES: usize = 50;

/// Mean of `N(mu, cov)` restricted to the positive orthant, by Gibbs sampling.
pub fn truncated_normal_mean(mu: &DVector<f64>, cov: &DMatrix<f64>, opts: &CoefOptions) -> Result<TruncatedMean> {
    let k = mu.len();
    if cov.shape() != (k, k) {
        return Err(mismatch("mean and covariance differ in size"));
    }
    if !(opts.max_se > 0.0) || opts.min_draws < BATCHES {
        return Err(invalid("max_se must be positive and min_draws at least 50"));
    }
    if k == 0 {
        return Ok(TruncatedMean { mean: DVector::zeros(0), se: DVector::zeros(0), draws: 0 });
    }
    let q = spd_factor(cov, "coefficient covariance")?.inverse();
    let cond_sd: Vec<f64> = (0..k).map(|j| 1.0 / q[(j, j)].sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: DVector<f64> = DVector::from_fn(k, |j, _| mu[j].max(cond_sd[j]));
    let sweep = |x: &mut DVector<f64>, rng: &mut ChaCha8Rng| {
        for j in 0..k {
            let mut shift = 0.0;
            for i in 0..k {
                if i != j {
                    shift += q[(j, i)] * (x[i] - mu[i]);
                }
            }
            let m = mu[j] - shift / q[(j, j)];
            let s = cond_sd[j];
            let v = m + s * std_normal_above(-m / s, rng);
            x[j] = v.max(f64::MIN_POSITIVE);
        }
    };
    for _ in 0..1000 {
        sweep(&mut x, &mut rng);
    }
    let mut batch_len = opts.min_draws.div_ceil(BATCHES);
    let mut batches: Vec<DVector<f64>> = Vec::with_capacity(BATCHES);
    let mut current = DVector::zeros(k);
    let mut in_current = 0;
    loop {
        sweep(&mut x, &mut rng);
        current += &x;
        in_current += 1;
        if in_current < batch_len {
            continue;
        }
        batches.push(std::mem::replace(&mut current, DVector::zeros(k)) / batch_len as f64);
        in_current = 0;
        if batches.len() < BATCHES {
            continue;
        }
        let mean = batches.iter().fold(DVector::zeros(k), |a, b| a + b) / BATCHES as f64;
        let se = DVector::from_fn(k, |j, _| {
            let var = batches.iter().map(|b| (b[j] - mean[j]).powi(2)).sum::<f64>() / (BATCHES as f64 - 1.0);
            (var / BATCHES as f64).sqrt()
        });
        let draws = batch_len * BATCHES;
        if se.max() <= opts.max_se || draws * 2 > opts.max_draws {
            return Ok(TruncatedMean { mean, se, draws });
        }
        // halve the batch count by merging neighbours, then keep filling
        batches = batches.chunks(2).map(|p| (&p[0] + &p[1]) * 0.5).collect();
        batch_len *= 2;
    }
}

/// Posterior means of the time offsets `(β′, β″)` with the base coefficients
/// integrated out as an untruncated Gaussian.
pub fn offset_means(stats: &GeneStats, sigma: f64, hp: &Hyperparams) -> Result<(DVector<f64>, DVector<f64>)> {
    let off = stats.offsets.as_ref().ok_or_else(|| invalid("offset means need time-dependent statistics"))?;
    let k = stats.k();
    let lambda = hp.beta_prior.rate(hp.c, sigma);
    let ridge = 1.0 / (hp.c * hp.zeta);
    let a = &off.g22 + DMatrix::identity(off.g22.nrows(), off.g22.nrows()) * ridge;
    let c = &off.g33 + DMatrix::identity(off.g33.nrows(), off.g33.nrows()) * ridge;
    let shift = DVector::from_element(k, sigma * lambda);
    // eliminate the other block's offsets, then the base coefficients
    let solve = |own: &DMatrix<f64>, g0own: &DMatrix<f64>, d_own: &DVector<f64>, other: &DMatrix<f64>, g0o: &DMatrix<f64>, d_o: &DVector<f64>| -> Result<DVector<f64>> {
        let ch_o = spd_factor(other, "offset block")?;
        let l = &stats.g00 - g0o * ch_o.solve(&g0o.transpose());
        let h = &stats.d0y - g0o * ch_o.solve(d_o) + &shift;
        let (j, hh) = if k == 0 {
            (own.clone(), -d_own)
        } else {
            let ch_l = spd_factor(&l, "L")?;
            (own - g0own.transpose() * ch_l.solve(g0own), -d_own + g0own.transpose() * ch_l.solve(&h))
        };
        Ok(spd_factor(&j, "J")?.solve(&hh))
    };
    let b2 = solve(&a, &off.g02, &off.d2y, &c, &off.g03, &off.d3y)?;
    let b3 = solve(&c, &off.g03, &off.d3y, &a, &off.g02, &off.d2y)?;
    Ok((b2, b3))
}

/// Coefficient estimates for a fixed network, in the reporting sign
/// convention `y ≈ X b` (so activations under the model are negative).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEstimates {
    /// Posterior means of the internal positive coefficients.
    pub internal: DMatrix<f64>,
    /// `−internal`: the signed regulation strength.
    pub beta: DMatrix<f64>,
    pub beta_se: DMatrix<f64>,
    pub beta_prime: Option<DMatrix<f64>>,
    pub beta_dprime: Option<DMatrix<f64>>,
    /// Targets left at zero because their selected design is singular.
    pub skipped: Vec<usize>,
}

struct GeneCoef {
    base: Option<TruncatedMean>,
    offsets: Option<(DVector<f64>, DVector<f64>)>,
}

/// Posterior coefficient means for every target given `net` and `sigma`.
pub fn beta_posterior_mean(
    design: &Design,
    net: &NetworkState,
    sigma: &[f64],
    hp: &Hyperparams,
    opts: &CoefOptions,
) -> Result<CoefficientEstimates> {
    let (g_count, m) = (design.g, design.m);
    if net.g() != g_count || net.m() != m || sigma.len() != g_count {
        return Err(mismatch("network, σ and data disagree in size"));
    }
    if net.is_time_dependent() != design.time_dependent() {
        return Err(invalid("network and design modes differ"));
    }
    let per_gene: Vec<Result<GeneCoef>> = (0..g_count)
        .into_par_iter()
        .map(|g| {
            let stats = design.gene_stats(net, g);
            let gene_opts = CoefOptions { seed: mix_seed(opts.seed, g as u64), ..*opts };
            let base = match truncated_posterior(&stats, sigma[g], hp) {
                Ok(Some((mu, cov))) => Some(truncated_normal_mean(&mu, &cov, &gene_opts)?),
                Ok(None) => Some(TruncatedMean { mean: DVector::zeros(0), se: DVector::zeros(0), draws: 0 }),
                Err(Error::Singular(_)) => None,
                Err(e) => return Err(e),
            };
            let offsets = match stats.offsets {
                Some(_) if base.is_some() => match offset_means(&stats, sigma[g], hp) {
                    Ok(v) => Some(v),
                    Err(Error::Singular(_)) => None,
                    Err(e) => return Err(e),
                },
                _ => None,
            };
            Ok(GeneCoef { base, offsets })
        })
        .collect();
    let mut internal = DMatrix::zeros(g_count, m);
    let mut se = DMatrix::zeros(g_count, m);
    let td = net.is_time_dependent();
    let mut bp = td.then(|| DMatrix::zeros(g_count, m));
    let mut bpp = td.then(|| DMatrix::zeros(g_count, m));
    let mut skipped = Vec::new();
    for (g, res) in per_gene.into_iter().enumerate() {
        let coef = res?;
        let Some(base) = coef.base else {
            skipped.push(g);
            continue;
        };
        for (i, mi) in net.r.row_ones(g).into_iter().enumerate() {
            internal[(g, mi)] = base.mean[i];
            se[(g, mi)] = base.se[i];
        }
        if let (Some((b2, b3)), Some(p), Some(pp)) = (coef.offsets, bp.as_mut(), bpp.as_mut()) {
            for (i, mi) in net.matrix(Matrix::Rp).row_ones(g).into_iter().enumerate() {
                p[(g, mi)] = -b2[i];
            }
            for (i, mi) in net.matrix(Matrix::Rpp).row_ones(g).into_iter().enumerate() {
                pp[(g, mi)] = -b3[i];
            }
        }
    }
    Ok(CoefficientEstimates { beta: -&internal, internal, beta_se: se, beta_prime: bp, beta_dprime: bpp, skipped })
}

/// Location and scale of the truncated posterior of the base coefficients,
/// or `None` when no base edge is selected.
fn truncated_posterior(stats: &GeneStats, sigma: f64, hp: &Hyperparams) -> Result<Option<(DVector<f64>, DMatrix<f64>)>> {
    let k = stats.k();
    if k == 0 {
        return Ok(None);
    }
    let lambda = hp.beta_prior.rate(hp.c, sigma);
    let (e, f) = match &stats.offsets {
        None => (stats.g00.clone(), -&stats.d0y - DVector::from_element(k, sigma * lambda)),
        Some(off) => {
            let ridge = 1.0 / (hp.c * hp.zeta);
            let a = spd_factor(&(&off.g22 + DMatrix::identity(off.g22.nrows(), off.g22.nrows()) * ridge), "A")?;
            let c = spd_factor(&(&off.g33 + DMatrix::identity(off.g33.nrows(), off.g33.nrows()) * ridge), "C")?;
            let e = &stats.g00 - &off.g02 * a.solve(&off.g02.transpose()) - &off.g03 * c.solve(&off.g03.transpose());
            let f = -&stats.d0y + &off.g03 * c.solve(&off.d3y) + &off.g02 * a.solve(&off.d2y)
                - DVector::from_element(k, sigma * lambda);
            ((&e + e.transpose()) * 0.5, f)
        }
    };
    let ch = spd_factor(&e, "E")?;
    Ok(Some((ch.solve(&f), ch.inverse() * sigma)))
}
