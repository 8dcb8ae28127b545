//! Orthant probabilities `P(W <= 0)` for `W ~ N(mean, cov)`.
//!
//! Dimension 1 is the univariate normal CDF, dimension 2 the bivariate
//! routine in [`super::bvn`], and dimension 3 and above use Genz's
//! separation-of-variables transform with variable reordering, integrated by
//! a randomly shifted Richtmyer lattice rule. All estimates are carried in log
//! space so that probabilities below `f64::MIN_POSITIVE` stay usable in
//! likelihood ratios. The random shifts come from a fixed seed, so a given
//! `(mean, cov, options)` always produces the same estimate.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bvn::log_bvn_lower;
use super::normal::{acklam, log_norm_cdf, mills_inverse, norm_quantile_log};
use crate::error::{invalid, mismatch, Error, Result};

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Accuracy and reproducibility knobs for the lattice estimator (k >= 3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthantOptions {
    /// Stop once three standard errors fall below this absolute error...
    pub abs_tol: f64,
    /// ...or below this fraction of the estimate.
    pub rel_tol: f64,
    pub seed: u64,
    /// Number of independent random shifts (error is estimated across them).
    pub shifts: usize,
    /// Lattice points per shift in the first pass; doubled until converged.
    pub min_points: usize,
    pub max_points: usize,
}

impl Default for OrthantOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-5, rel_tol: 1e-3, seed: 0x6f72_7468_616e_7400, shifts: 10, min_points: 64, max_points: 1 << 16 }
    }
}

impl OrthantOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantEstimate {
    pub log_prob: f64,
    /// Standard error of `exp(log_prob)`; zero for the exact routines.
    pub std_error: f64,
    /// Lattice points per shift actually used (0 for exact routines).
    pub points: usize,
}

impl OrthantEstimate {
    fn exact(log_prob: f64) -> Self {
        Self { log_prob, std_error: 0.0, points: 0 }
    }

    pub fn prob(&self) -> f64 {
        self.log_prob.exp()
    }
}

/// `P(W <= 0)` for `W ~ N(mean, cov)` with absolute error at most `tol`
/// (three standard errors for the randomized estimator).
pub fn mvn_cdf_at_zero(mean: &DVector<f64>, cov: &DMatrix<f64>, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let opts = OrthantOptions { abs_tol: tol, rel_tol: 0.0, max_points: 1 << 20, ..OrthantOptions::default() };
    Ok(log_mvn_orthant(mean, cov, &opts)?.prob())
}

/// Log-space orthant probability with an error estimate.
pub fn log_mvn_orthant(mean: &DVector<f64>, cov: &DMatrix<f64>, opts: &OrthantOptions) -> Result<OrthantEstimate> {
    let k = mean.len();
    if cov.nrows() != k || cov.ncols() != k {
        return Err(mismatch(format!("mean has length {k} but covariance is {}x{}", cov.nrows(), cov.ncols())));
    }
    if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
        return Err(invalid("non-finite mean or covariance entry"));
    }
    match k {
        0 => Ok(OrthantEstimate::exact(0.0)),
        1 => {
            let v = cov[(0, 0)];
            if !(v > 0.0) {
                return Err(Error::Singular(format!("variance {v} is not positive")));
            }
            Ok(OrthantEstimate::exact(log_norm_cdf(-mean[0] / v.sqrt())))
        }
        2 => {
            let (v1, v2, c) = (cov[(0, 0)], cov[(1, 1)], 0.5 * (cov[(0, 1)] + cov[(1, 0)]));
            if !(v1 > 0.0 && v2 > 0.0) {
                return Err(Error::Singular("non-positive variance".into()));
            }
            let (s1, s2) = (v1.sqrt(), v2.sqrt());
            let r = c / (s1 * s2);
            if !(r.abs() < 1.0 - 1e-12) {
                return Err(Error::Singular(format!("correlation {r} is not inside (-1, 1)")));
            }
            Ok(OrthantEstimate::exact(log_bvn_lower(-mean[0] / s1, -mean[1] / s2, r)))
        }
        _ => lattice_estimate(mean, cov, opts),
    }
}

/// Cholesky factor of the reordered covariance together with the reordered
/// upper limits.
struct Reordered {
    chol: DMatrix<f64>,
    upper: Vec<f64>,
}

fn reorder(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<Reordered> {
    let k = mean.len();
    let mut sigma = cov.clone();
    let mut upper: Vec<f64> = mean.iter().map(|m| -m).collect();
    let mut l = DMatrix::<f64>::zeros(k, k);
    let mut y = vec![0.0; k];
    for j in 0..k {
        let mut best = j;
        let mut best_val = f64::INFINITY;
        for i in j..k {
            let mut v = sigma[(i, i)];
            let mut s = 0.0;
            for m in 0..j {
                v -= l[(i, m)] * l[(i, m)];
                s += l[(i, m)] * y[m];
            }
            if v <= 0.0 {
                continue;
            }
            let lp = log_norm_cdf((upper[i] - s) / v.sqrt());
            if lp < best_val {
                best_val = lp;
                best = i;
            }
        }
        if best != j {
            sigma.swap_rows(j, best);
            sigma.swap_columns(j, best);
            upper.swap(j, best);
            for m in 0..j {
                let t = l[(j, m)];
                l[(j, m)] = l[(best, m)];
                l[(best, m)] = t;
            }
        }
        let mut d = sigma[(j, j)];
        for m in 0..j {
            d -= l[(j, m)] * l[(j, m)];
        }
        if !(d > 1e-14 * sigma[(j, j)].abs()) {
            return Err(Error::Singular("covariance is not positive definite".into()));
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..k {
            let mut s = sigma[(i, j)];
            for m in 0..j {
                s -= l[(i, m)] * l[(j, m)];
            }
            l[(i, j)] = s / ljj;
        }
        let mut s = 0.0;
        for m in 0..j {
            s += l[(j, m)] * y[m];
        }
        let bt = (upper[j] - s) / ljj;
        // E[Z | Z < bt]
        y[j] = -mills_inverse(bt);
    }
    Ok(Reordered { chol: l, upper })
}

/// Log integrand of the transformed problem at one point of `[0,1)^(k-1)`.
fn log_integrand(r: &Reordered, w: &[f64], y: &mut [f64]) -> f64 {
    let k = r.upper.len();
    let mut total = 0.0;
    for j in 0..k {
        let mut s = 0.0;
        for m in 0..j {
            s += r.chol[(j, m)] * y[m];
        }
        let bt = (r.upper[j] - s) / r.chol[(j, j)];
        let le = log_norm_cdf(bt);
        total += le;
        if j + 1 < k {
            let u = w[j].clamp(1e-300, 1.0 - 1e-16);
            y[j] = if le > -700.0 {
                let p = u * le.exp();
                if p > 1e-300 {
                    // the integrand is smooth in y; 1e-9 relative accuracy is plenty
                    acklam(p)
                } else {
                    norm_quantile_log(u.ln() + le)
                }
            } else {
                norm_quantile_log(u.ln() + le)
            };
        }
    }
    total
}

/// Running log-sum-exp accumulator.
#[derive(Clone, Copy)]
struct LogAcc {
    max: f64,
    sum: f64,
    n: usize,
}

impl LogAcc {
    fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0, n: 0 }
    }

    fn push(&mut self, v: f64) {
        self.n += 1;
        if v == f64::NEG_INFINITY {
            return;
        }
        if v > self.max {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.sum += (v - self.max).exp();
        }
    }

    fn log_mean(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + (self.sum / self.n as f64).ln()
        }
    }
}

fn lattice_estimate(mean: &DVector<f64>, cov: &DMatrix<f64>, opts: &OrthantOptions) -> Result<OrthantEstimate> {
    let k = mean.len();
    if k - 1 > PRIMES.len() {
        return Err(Error::Unsupported(format!("orthant dimension {k} exceeds lattice generator table")));
    }
    let r = reorder(mean, cov)?;
    let gen: Vec<f64> = PRIMES[..k - 1].iter().map(|&p| (p as f64).sqrt().fract()).collect();
    let shifts_n = opts.shifts.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let shifts: Vec<Vec<f64>> = (0..shifts_n).map(|_| (0..k - 1).map(|_| rng.random::<f64>()).collect()).collect();
    let mut accs = vec![LogAcc::new(); shifts_n];
    let mut w = vec![0.0; k - 1];
    let mut y = vec![0.0; k];
    let mut done = 0usize;
    let mut target = opts.min_points.max(8);
    loop {
        for (acc, shift) in accs.iter_mut().zip(&shifts) {
            for i in done..target {
                let idx = (i + 1) as f64;
                for d in 0..k - 1 {
                    let x = (idx * gen[d] + shift[d]).fract();
                    // baker's transform periodizes the integrand
                    w[d] = 1.0 - (2.0 * x - 1.0).abs();
                }
                acc.push(log_integrand(&r, &w, &mut y));
            }
        }
        done = target;
        let logs: Vec<f64> = accs.iter().map(LogAcc::log_mean).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Ok(OrthantEstimate { log_prob: f64::NEG_INFINITY, std_error: 0.0, points: done });
        }
        let scaled: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let m = scaled.iter().sum::<f64>() / shifts_n as f64;
        let var = scaled.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / (shifts_n as f64 - 1.0);
        let se_scaled = (var / shifts_n as f64).sqrt();
        let log_prob = top + m.ln();
        let se = se_scaled * top.exp();
        let prob = log_prob.exp();
        let converged = 3.0 * se <= opts.abs_tol || 3.0 * se_scaled <= opts.rel_tol * m;
        if converged || target >= opts.max_points {
            return Ok(OrthantEstimate { log_prob: log_prob.min(0.0), std_error: se.min(prob.max(se)), points: done });
        }
        target = (target * 2).min(opts.max_points.max(target + 1));
    }
}
