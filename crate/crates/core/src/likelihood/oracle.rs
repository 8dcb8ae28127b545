//! Brute-force evaluation of the marginal likelihood by integrating the
//! likelihood times the prior over coefficient space.
//!
//! Nothing here reuses the closed-form algebra: the integrand is the raw
//! residual sum of squares. It exists to check [`super::marginal`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal};

use super::normal::{log_sum_exp, LN_2PI};
use super::quad::integrate_log_concave;
use crate::error::{invalid, mismatch, Error, Result};
use crate::model::Hyperparams;

/// How to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMode {
    /// Nested adaptive quadrature, up to three coefficients.
    Quadrature { rel_tol: f64 },
    /// Importance sampling from a Student-t fitted at the posterior mode, up to six coefficients.
    MonteCarlo { draws: usize, seed: u64 },
}

impl OracleMode {
    pub const MIN_DRAWS: usize = 1_000_000;

    pub fn quadrature() -> Self {
        Self::Quadrature { rel_tol: 1e-10 }
    }

    pub fn monte_carlo(seed: u64) -> Self {
        Self::MonteCarlo { draws: Self::MIN_DRAWS, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub log_value: f64,
    /// Error estimate on the log scale (quadrature: estimated bound;
    /// Monte Carlo: one standard error).
    pub error: f64,
}

struct Problem {
    y: DVector<f64>,
    cols: Vec<DVector<f64>>,
    positive: Vec<bool>,
    sigma: f64,
    lambda: f64,
    offset_var: f64,
}

impl Problem {
    fn dims(&self) -> usize {
        self.cols.len()
    }

    fn log_prior(&self, j: usize, t: f64) -> f64 {
        if self.positive[j] {
            if t < 0.0 {
                f64::NEG_INFINITY
            } else {
                self.lambda.ln() - self.lambda * t
            }
        } else {
            -0.5 * (LN_2PI + self.offset_var.ln()) - t * t / (2.0 * self.offset_var)
        }
    }

    fn log_lik(&self, rss: f64) -> f64 {
        -0.5 * self.y.len() as f64 * (LN_2PI + self.sigma.ln()) - rss / (2.0 * self.sigma)
    }

    fn log_joint(&self, theta: &[f64]) -> f64 {
        let mut r = self.y.clone();
        let mut lp = 0.0;
        for (j, &t) in theta.iter().enumerate() {
            lp += self.log_prior(j, t);
            if lp == f64::NEG_INFINITY {
                return lp;
            }
            r.axpy(t, &self.cols[j], 1.0);
        }
        lp + self.log_lik(r.norm_squared())
    }

    /// Conditional mode of coordinate `j` given the residual `r` that excludes it.
    fn coordinate_mode(&self, j: usize, r: &DVector<f64>) -> f64 {
        let d = &self.cols[j];
        let dd = d.norm_squared();
        if self.positive[j] {
            if dd == 0.0 {
                0.0
            } else {
                (-(r.dot(d) + self.sigma * self.lambda) / dd).max(0.0)
            }
        } else {
            -r.dot(d) / (dd + self.sigma / self.offset_var)
        }
    }

    fn width(&self, j: usize) -> f64 {
        let extra = if self.positive[j] { 0.0 } else { self.sigma / self.offset_var };
        (self.sigma / (self.cols[j].norm_squared() + extra)).sqrt().max(1e-8)
    }

    fn nested(&self, j: usize, r: &DVector<f64>, rel_tol: f64) -> (f64, f64) {
        let (lo, hi) = if self.positive[j] { (0.0, f64::INFINITY) } else { (f64::NEG_INFINITY, f64::INFINITY) };
        let start = self.coordinate_mode(j, r);
        let scale = self.width(j);
        let d = &self.cols[j];
        let mut worst = 0.0f64;
        let res = if j + 1 == self.dims() {
            let (rr, rd, dd) = (r.norm_squared(), r.dot(d), d.norm_squared());
            integrate_log_concave(
                |t| self.log_prior(j, t) + self.log_lik(rr + 2.0 * t * rd + t * t * dd),
                lo,
                hi,
                start,
                scale,
                rel_tol,
            )
        } else {
            integrate_log_concave(
                |t| {
                    let mut next = r.clone();
                    next.axpy(t, d, 1.0);
                    let (v, e) = self.nested(j + 1, &next, rel_tol);
                    worst = worst.max(e);
                    self.log_prior(j, t) + v
                },
                lo,
                hi,
                start,
                scale,
                rel_tol,
            )
        };
        (res.log_value, res.rel_error + worst)
    }

    fn mode(&self) -> Vec<f64> {
        let p = self.dims();
        let mut theta = vec![0.0; p];
        let mut r = self.y.clone();
        for _ in 0..2000 {
            let mut moved = 0.0f64;
            for j in 0..p {
                r.axpy(-theta[j], &self.cols[j], 1.0);
                let t = self.coordinate_mode(j, &r);
                moved = moved.max((t - theta[j]).abs() / self.width(j));
                theta[j] = t;
                r.axpy(t, &self.cols[j], 1.0);
            }
            if moved < 1e-12 {
                break;
            }
        }
        theta
    }

    fn monte_carlo(&self, draws: usize, seed: u64) -> Result<OracleEstimate> {
        const NU: f64 = 4.0;
        let p = self.dims();
        let center = self.mode();
        let mut precision = DMatrix::from_fn(p, p, |a, b| self.cols[a].dot(&self.cols[b]));
        for j in 0..p {
            if !self.positive[j] {
                precision[(j, j)] += self.sigma / self.offset_var;
            }
        }
        let cov = precision
            .try_inverse()
            .ok_or_else(|| Error::Singular("design Gram matrix is singular".into()))?
            * (self.sigma * 1.5);
        let chol = cov.clone().cholesky().ok_or_else(|| Error::Singular("proposal covariance".into()))?;
        let l = chol.l();
        let log_det: f64 = (0..p).map(|i| 2.0 * l[(i, i)].ln()).sum();
        let pf = p as f64;
        let log_norm = libm::lgamma(0.5 * (NU + pf))
            - libm::lgamma(0.5 * NU)
            - 0.5 * pf * (NU * std::f64::consts::PI).ln()
            - 0.5 * log_det;
        let chi = ChiSquared::new(NU).expect("valid degrees of freedom");
        let folds: Vec<usize> = (0..p).filter(|&j| self.positive[j]).collect();
        let log_t = |point: &DVector<f64>| {
            let delta = point - DVector::from_column_slice(&center);
            let v = l.solve_lower_triangular(&delta).expect("triangular factor is invertible");
            log_norm - 0.5 * (NU + pf) * (v.norm_squared() / NU).ln_1p()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut logs = Vec::with_capacity(draws);
        let mut z = DVector::zeros(p);
        let mut terms = vec![0.0; 1 << folds.len()];
        for _ in 0..draws {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let w: f64 = rng.sample(chi);
            let mut theta = DVector::from_column_slice(&center) + &l * &z * (NU / w).sqrt();
            // fold the constrained coordinates onto the half-line; the
            // proposal density then sums the t density over all reflections
            for &j in &folds {
                theta[j] = theta[j].abs();
            }
            for (mask, term) in terms.iter_mut().enumerate() {
                let mut reflected = theta.clone();
                for (bit, &j) in folds.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        reflected[j] = -reflected[j];
                    }
                }
                *term = log_t(&reflected);
            }
            let log_q = log_sum_exp(&terms);
            logs.push(self.log_joint(theta.as_slice()) - log_q);
        }
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(Error::Unsupported("no importance draw hit the support".into()));
        }
        let n = draws as f64;
        let w: Vec<f64> = logs.iter().map(|v| (v - top).exp()).collect();
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        Ok(OracleEstimate { log_value: top + mean.ln(), error: (var / n).sqrt() / mean })
    }
}

/// Numerically integrated `ln f(y | designs, σ)`.
///
/// `offsets` holds the padded time-block designs for the time-dependent model.
pub fn oracle_log_marginal(
    y: &DVector<f64>,
    x_sel: &DMatrix<f64>,
    offsets: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
    sigma: f64,
    hp: &Hyperparams,
    mode: OracleMode,
) -> Result<OracleEstimate> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    let n = y.len();
    let mut cols: Vec<DVector<f64>> = x_sel.column_iter().map(|c| c.into_owned()).collect();
    let mut positive = vec![true; cols.len()];
    let mut designs = vec![x_sel];
    if let Some((x2, x3)) = offsets {
        for x in [x2, x3] {
            cols.extend(x.column_iter().map(|c| c.into_owned()));
            positive.extend(std::iter::repeat_n(false, x.ncols()));
            designs.push(x);
        }
    }
    if designs.iter().any(|d| d.nrows() != n) {
        return Err(mismatch("designs and response differ in length"));
    }
    let problem = Problem {
        y: y.clone(),
        cols,
        positive,
        sigma,
        lambda: hp.beta_prior.rate(hp.c, sigma),
        offset_var: hp.c * hp.zeta * sigma,
    };
    if problem.dims() == 0 {
        return Ok(OracleEstimate { log_value: problem.log_lik(y.norm_squared()), error: 0.0 });
    }
    match mode {
        OracleMode::Quadrature { rel_tol } => {
            if problem.dims() > 3 {
                return Err(Error::Unsupported(format!("quadrature oracle handles at most 3 coefficients, got {}", problem.dims())));
            }
            let (v, e) = problem.nested(0, &problem.y, rel_tol);
            Ok(OracleEstimate { log_value: v, error: e })
        }
        OracleMode::MonteCarlo { draws, seed } => {
            if problem.dims() > 6 {
                return Err(Error::Unsupported(format!("Monte Carlo oracle handles at most 6 coefficients, got {}", problem.dims())));
            }
            if draws < OracleMode::MIN_DRAWS {
                return Err(invalid(format!("Monte Carlo oracle needs at least {} draws", OracleMode::MIN_DRAWS)));
            }
            problem.monte_carlo(draws, seed)
        }
    }
}
