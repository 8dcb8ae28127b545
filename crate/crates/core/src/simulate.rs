//! Planted networks and expression data drawn from the model itself.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{ExpressionData, Indicator, ScoreSet};

/// What to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub g: usize,
    pub m: usize,
    pub n: usize,
    /// Mean in-degree; each target gets `floor` or `floor + 1` regulators.
    pub edges_per_gene: f64,
    pub beta_scale: f64,
    pub noise_sd: f64,
    /// Chance that a true edge receives a high score in a given source.
    pub score_informativeness: f64,
    pub n_score_sources: usize,
    /// Split samples into three time blocks and plant offsets.
    pub time_mode: bool,
    /// Fraction of true edges given a nonzero offset in each later block.
    pub time_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            g: 50,
            m: 8,
            n: 30,
            edges_per_gene: 1.0,
            beta_scale: 1.0,
            noise_sd: 0.5,
            score_informativeness: 0.8,
            n_score_sources: 2,
            time_mode: false,
            time_fraction: 0.3,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.g == 0 || self.m == 0 || self.n < 2 {
            return Err(invalid("need g ≥ 1, m ≥ 1 and n ≥ 2"));
        }
        if !(self.edges_per_gene >= 0.0) || self.edges_per_gene > self.m as f64 {
            return Err(invalid(format!("edges_per_gene {} is infeasible with m = {}", self.edges_per_gene, self.m)));
        }
        if !(self.noise_sd >= 0.0) || !(self.beta_scale > 0.0) {
            return Err(invalid("noise_sd must be non-negative and beta_scale positive"));
        }
        for (name, p) in [("score_informativeness", self.score_informativeness), ("time_fraction", self.time_fraction)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.time_mode && self.n < 3 {
            return Err(invalid("time mode needs at least three samples"));
        }
        Ok(())
    }
}

/// The planted truth, in the internal positive parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub r: Indicator,
    pub r_prime: Option<Indicator>,
    pub r_dprime: Option<Indicator>,
    /// G×M, positive exactly on the planted edges.
    pub beta: DMatrix<f64>,
    pub beta_prime: Option<DMatrix<f64>>,
    pub beta_dprime: Option<DMatrix<f64>>,
    /// Noise variance.
    pub sigma: f64,
}

/// Draws data, raw scores and truth. Scores are returned unnormalized, as
/// they would be read from files.
///
/// Regulator columns are centered along with the targets so that the
/// no-intercept model stays exact after centering.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(ExpressionData, ScoreSet, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (g, m, n) = (spec.g, spec.m, spec.n);
    let mut x = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut c in x.column_iter_mut() {
        let mean = c.mean();
        c.add_scalar_mut(-mean);
    }
    let base = spec.edges_per_gene.floor() as usize;
    let extra = spec.edges_per_gene - base as f64;
    let mut r = Indicator::zeros(g, m);
    let mut beta = DMatrix::zeros(g, m);
    for gi in 0..g {
        let k = (base + usize::from(rng.random::<f64>() < extra)).min(m);
        for mi in rand::seq::index::sample(&mut rng, m, k) {
            r.set(gi, mi, true);
            beta[(gi, mi)] = spec.beta_scale * rng.sample::<f64, _>(Exp1);
        }
    }
    let labels: Vec<u8> = (0..n).map(|i| if spec.time_mode { (1 + 3 * i / n) as u8 } else { 1 }).collect();
    let offsets = |block: u8, rng: &mut ChaCha8Rng| {
        let mut ind = Indicator::zeros(g, m);
        let mut b = DMatrix::zeros(g, m);
        for (gi, mi) in r.iter_ones() {
            if rng.random::<f64>() < spec.time_fraction {
                ind.set(gi, mi, true);
                b[(gi, mi)] = spec.beta_scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let rows: Vec<usize> = (0..n).filter(|&i| labels[i] == block).collect();
        (ind, b, rows)
    };
    let (time2, time3) = if spec.time_mode {
        (Some(offsets(2, &mut rng)), Some(offsets(3, &mut rng)))
    } else {
        (None, None)
    };
    let mut y = -(&x * beta.transpose());
    for (_, b, rows) in [&time2, &time3].into_iter().flatten() {
        for &i in rows {
            let xi = x.row(i);
            for gi in 0..g {
                y[(i, gi)] -= (0..m).map(|mi| xi[mi] * b[(gi, mi)]).sum::<f64>();
            }
        }
    }
    for v in y.iter_mut() {
        *v += spec.noise_sd * rng.sample::<f64, _>(StandardNormal);
    }
    let high = Beta::new(5.0, 2.0).expect("valid Beta");
    let low = Beta::new(2.0, 5.0).expect("valid Beta");
    let mut scores = Vec::with_capacity(spec.n_score_sources);
    for _ in 0..spec.n_score_sources {
        scores.push(DMatrix::from_fn(g, m, |gi, mi| {
            if r.get(gi, mi) && rng.random::<f64>() < spec.score_informativeness {
                rng.sample(high)
            } else if rng.random::<f64>() < 0.9 {
                0.0
            } else {
                rng.sample(low)
            }
        }));
    }
    let names = (1..=spec.n_score_sources).map(|j| format!("source{j}")).collect();
    let data = ExpressionData::new(
        y,
        x,
        labels,
        (1..=n).map(|i| format!("s{i}")).collect(),
        (1..=g).map(|i| format!("gene{i}")).collect(),
        (1..=m).map(|i| format!("reg{i}")).collect(),
    )?;
    let truth = GroundTruth {
        r,
        r_prime: time2.as_ref().map(|t| t.0.clone()),
        r_dprime: time3.as_ref().map(|t| t.0.clone()),
        beta,
        beta_prime: time2.map(|t| t.1),
        beta_dprime: time3.map(|t| t.1),
        sigma: spec.noise_sd * spec.noise_sd,
    };
    Ok((data, ScoreSet::new(scores, names)?, truth))
}

/// Residuals of target `g` under the true coefficients.
pub fn true_residuals(data: &ExpressionData, truth: &GroundTruth, g: usize) -> DVector<f64> {
    let mut fit = -(&data.x * truth.beta.row(g).transpose());
    for (b, t) in [(&truth.beta_prime, 2u8), (&truth.beta_dprime, 3u8)] {
        if let Some(b) = b {
            for i in 0..data.n() {
                if data.time_labels[i] == t {
                    fit[i] -= data.x.row(i).dot(&b.row(g));
                }
            }
        }
    }
    data.y.column(g) - fit
}
