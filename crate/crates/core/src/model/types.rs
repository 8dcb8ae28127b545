use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Error, Result};

/// Expression matrices for one experiment.
///
/// `y` is N×G (targets), `x` is N×M (regulators). Targets are column-centered
/// on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionData {
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
    /// One label per sample, each in `1..=3`.
    pub time_labels: Vec<u8>,
    pub sample_ids: Vec<String>,
    pub gene_names: Vec<String>,
    pub regulator_names: Vec<String>,
}

impl ExpressionData {
    pub fn new(
        y: DMatrix<f64>,
        x: DMatrix<f64>,
        time_labels: Vec<u8>,
        sample_ids: Vec<String>,
        gene_names: Vec<String>,
        regulator_names: Vec<String>,
    ) -> Result<Self> {
        let n = y.nrows();
        if x.nrows() != n || time_labels.len() != n || sample_ids.len() != n {
            return Err(mismatch(format!(
                "Y has {n} rows, X has {}, {} time labels, {} sample ids",
                x.nrows(),
                time_labels.len(),
                sample_ids.len()
            )));
        }
        if gene_names.len() != y.ncols() || regulator_names.len() != x.ncols() {
            return Err(mismatch("name lists do not match matrix widths"));
        }
        if n < 2 {
            return Err(invalid("at least two samples are required"));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite expression value"));
        }
        if let Some(t) = time_labels.iter().find(|t| !(1..=3).contains(*t)) {
            return Err(invalid(format!("time label {t} outside 1..=3")));
        }
        let mut data = Self { y, x, time_labels, sample_ids, gene_names, regulator_names };
        data.center_targets();
        Ok(data)
    }

    /// Convenience constructor with generated names and a single time point.
    pub fn from_matrices(y: DMatrix<f64>, x: DMatrix<f64>) -> Result<Self> {
        let n = y.nrows();
        let labels = vec![1; n];
        let ids = (0..n).map(|i| format!("s{}", i + 1)).collect();
        let genes = (0..y.ncols()).map(|g| format!("gene{}", g + 1)).collect();
        let regs = (0..x.ncols()).map(|m| format!("reg{}", m + 1)).collect();
        Self::new(y, x, labels, ids, genes, regs)
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn g(&self) -> usize {
        self.y.ncols()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    fn center_targets(&mut self) {
        center_columns(&mut self.y);
    }

    /// Row indices of time blocks 2 and 3, after checking the labels form
    /// contiguous groups in sample order.
    pub fn time_blocks(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        if self.time_labels.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("time labels must form contiguous non-decreasing groups"));
        }
        let rows = |t: u8| self.time_labels.iter().enumerate().filter(|(_, &l)| l == t).map(|(i, _)| i).collect();
        Ok((rows(2), rows(3)))
    }

    /// `x` with every row outside `rows` zeroed (the padded design of one time block).
    pub fn padded_x(&self, rows: &[usize]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n(), self.m());
        for &i in rows {
            out.set_row(i, &self.x.row(i));
        }
        out
    }

    /// Columns `cols` of `x`.
    pub fn x_columns(&self, cols: &[usize]) -> DMatrix<f64> {
        self.x.select_columns(cols)
    }

    pub fn y_column(&self, g: usize) -> DVector<f64> {
        self.y.column(g).into_owned()
    }
}

/// One or more regulator-target association matrices (each G×M).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub scores: Vec<DMatrix<f64>>,
    pub source_names: Vec<String>,
}

impl ScoreSet {
    pub fn new(scores: Vec<DMatrix<f64>>, source_names: Vec<String>) -> Result<Self> {
        if scores.len() != source_names.len() {
            return Err(mismatch("one name per score source is required"));
        }
        if let Some(first) = scores.first() {
            if scores.iter().any(|s| s.shape() != first.shape()) {
                return Err(mismatch("score sources differ in shape"));
            }
        }
        if scores.iter().flat_map(|s| s.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite score"));
        }
        Ok(Self { scores, source_names })
    }

    /// A set with no sources; the edge prior then reduces to the intercept.
    pub fn empty() -> Self {
        Self { scores: Vec::new(), source_names: Vec::new() }
    }

    pub fn sources(&self) -> usize {
        self.scores.len()
    }

    /// Scores for edge `(g, m)` across sources.
    pub fn row(&self, g: usize, m: usize) -> Vec<f64> {
        self.scores.iter().map(|s| s[(g, m)]).collect()
    }

    pub fn check_shape(&self, g: usize, m: usize) -> Result<()> {
        match self.scores.first() {
            Some(s) if s.shape() != (g, m) => {
                Err(mismatch(format!("scores are {}x{}, network is {g}x{m}", s.nrows(), s.ncols())))
            }
            _ => Ok(()),
        }
    }
}

/// How the coefficient prior scale depends on σ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoefficientPrior {
    /// Exponential with rate `σ^{-1/2}/c` (mean `c·√σ`).
    #[default]
    ScaledExponential,
    /// Exponential with rate `c·σ`, i.e. `Ga(1, cσ)` read as shape/rate.
    GammaRate,
}

impl CoefficientPrior {
    pub fn rate(self, c: f64, sigma: f64) -> f64 {
        match self {
            Self::ScaledExponential => 1.0 / (c * sigma.sqrt()),
            Self::GammaRate => c * sigma,
        }
    }
}

/// Prior hyperparameters and proposal tuning constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub c: f64,
    pub delta: f64,
    pub d: f64,
    pub eta: f64,
    pub eta_b: f64,
    pub a_tau: f64,
    pub b_tau: f64,
    pub zeta: f64,
    pub phi: f64,
    pub lambda: f64,
    pub tau_prop_var: f64,
    /// σ proposal variance. Has no default: pick it with a pilot run.
    pub e_sigma: Option<f64>,
    pub beta_prior: CoefficientPrior,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            c: 0.7,
            delta: 3.0,
            d: 0.2,
            eta: -3.0,
            eta_b: 0.05,
            a_tau: 1.5,
            b_tau: 0.2,
            zeta: 1.0,
            phi: 0.5,
            lambda: 0.5,
            tau_prop_var: 0.01,
            e_sigma: None,
            beta_prior: CoefficientPrior::ScaledExponential,
        }
    }
}

impl Hyperparams {
    pub fn with_e_sigma(mut self, e: f64) -> Self {
        self.e_sigma = Some(e);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c", self.c),
            ("delta", self.delta),
            ("d", self.d),
            ("a_tau", self.a_tau),
            ("b_tau", self.b_tau),
            ("zeta", self.zeta),
            ("tau_prop_var", self.tau_prop_var),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if let Some(e) = self.e_sigma {
            if !(e > 0.0 && e.is_finite()) {
                return Err(invalid(format!("e_sigma must be positive and finite, got {e}")));
            }
        }
        if !self.eta.is_finite() {
            return Err(invalid("eta must be finite"));
        }
        for (name, p) in [("phi", self.phi), ("lambda", self.lambda)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if !(self.eta_b > 0.0 && self.eta_b < 1.0) {
            return Err(invalid(format!("eta_b must lie in (0, 1), got {}", self.eta_b)));
        }
        Ok(())
    }

    /// The σ proposal variance, or an error naming the missing setting.
    pub fn require_e_sigma(&self) -> Result<f64> {
        self.e_sigma.ok_or_else(|| invalid("e_sigma is not set; choose it with a pilot run (`tune`)"))
    }
}

/// Dense row-major binary matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Indicator {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Indicator {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, bits: vec![false; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut out = Self::zeros(rows, cols);
        for g in 0..rows {
            for m in 0..cols {
                out.bits[g * cols + m] = f(g, m);
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, g: usize, m: usize) -> bool {
        self.bits[g * self.cols + m]
    }

    #[inline]
    pub fn set(&mut self, g: usize, m: usize, v: bool) {
        self.bits[g * self.cols + m] = v;
    }

    pub fn row_sum(&self, g: usize) -> usize {
        self.bits[g * self.cols..(g + 1) * self.cols].iter().filter(|&&b| b).count()
    }

    /// Column indices of the ones in row `g`, ascending.
    pub fn row_ones(&self, g: usize) -> Vec<usize> {
        (0..self.cols).filter(|&m| self.get(g, m)).collect()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| (i / self.cols, i % self.cols))
    }
}

/// Which indicator matrix a move or summary refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Matrix {
    /// Base edges `R`.
    R,
    /// Time-2 offsets `R′`.
    Rp,
    /// Time-3 offsets `R″`.
    Rpp,
}

/// Inclusion indicators with cached row sums.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkState {
    pub r: Indicator,
    pub r_prime: Option<Indicator>,
    pub r_dprime: Option<Indicator>,
    pub k: Vec<usize>,
    pub k2: Option<Vec<usize>>,
    pub k3: Option<Vec<usize>>,
}

impl NetworkState {
    pub fn empty(g: usize, m: usize, time_dependent: bool) -> Self {
        let sub = || time_dependent.then(|| Indicator::zeros(g, m));
        let ks = || time_dependent.then(|| vec![0; g]);
        Self { r: Indicator::zeros(g, m), r_prime: sub(), r_dprime: sub(), k: vec![0; g], k2: ks(), k3: ks() }
    }

    /// Builds a state from explicit matrices, computing the row sums.
    pub fn from_indicators(r: Indicator, r_prime: Option<Indicator>, r_dprime: Option<Indicator>) -> Result<Self> {
        if r_prime.is_some() != r_dprime.is_some() {
            return Err(invalid("R′ and R″ must be given together"));
        }
        for sub in r_prime.iter().chain(r_dprime.iter()) {
            if (sub.rows(), sub.cols()) != (r.rows(), r.cols()) {
                return Err(mismatch("time offset indicators differ in shape from R"));
            }
        }
        let sums = |ind: &Indicator| (0..ind.rows()).map(|g| ind.row_sum(g)).collect::<Vec<_>>();
        Ok(Self {
            k: sums(&r),
            k2: r_prime.as_ref().map(sums),
            k3: r_dprime.as_ref().map(sums),
            r,
            r_prime,
            r_dprime,
        })
    }

    pub fn g(&self) -> usize {
        self.r.rows()
    }

    pub fn m(&self) -> usize {
        self.r.cols()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.r_prime.is_some()
    }

    pub fn matrix(&self, which: Matrix) -> &Indicator {
        match which {
            Matrix::R => &self.r,
            Matrix::Rp => self.r_prime.as_ref().expect("R′ requires time-dependent mode"),
            Matrix::Rpp => self.r_dprime.as_ref().expect("R″ requires time-dependent mode"),
        }
    }

    pub fn row_count(&self, which: Matrix, g: usize) -> usize {
        match which {
            Matrix::R => self.k[g],
            Matrix::Rp => self.k2.as_ref().expect("R′ requires time-dependent mode")[g],
            Matrix::Rpp => self.k3.as_ref().expect("R″ requires time-dependent mode")[g],
        }
    }

    /// Sets one cell and keeps the row sums in step.
    pub fn set(&mut self, which: Matrix, g: usize, m: usize, v: bool) {
        let (ind, k) = match which {
            Matrix::R => (&mut self.r, &mut self.k),
            Matrix::Rp => (self.r_prime.as_mut().expect("R′"), self.k2.as_mut().expect("k2")),
            Matrix::Rpp => (self.r_dprime.as_mut().expect("R″"), self.k3.as_mut().expect("k3")),
        };
        let old = ind.get(g, m);
        if old != v {
            ind.set(g, m, v);
            if v {
                k[g] += 1;
            } else {
                k[g] -= 1;
            }
        }
    }

    pub fn flip(&mut self, which: Matrix, g: usize, m: usize) {
        let v = self.matrix(which).get(g, m);
        self.set(which, g, m, !v);
    }

    /// Checks cached row sums and, when `constrained`, that offsets are nested in `R`.
    pub fn check(&self, constrained: bool) -> Result<()> {
        let pairs = [
            (Some(&self.r), Some(&self.k), "R"),
            (self.r_prime.as_ref(), self.k2.as_ref(), "R′"),
            (self.r_dprime.as_ref(), self.k3.as_ref(), "R″"),
        ];
        for (ind, k, name) in pairs {
            if let (Some(ind), Some(k)) = (ind, k) {
                for g in 0..ind.rows() {
                    if ind.row_sum(g) != k[g] {
                        return Err(Error::Audit(format!("cached row sum of {name} row {g} is stale")));
                    }
                }
            }
        }
        if constrained {
            for sub in self.r_prime.iter().chain(self.r_dprime.iter()) {
                if let Some((g, m)) = sub.iter_ones().find(|&(g, m)| !self.r.get(g, m)) {
                    return Err(Error::Audit(format!("offset at ({g}, {m}) is set without a base edge")));
                }
            }
        }
        Ok(())
    }
}

/// Everything a chain carries between iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub net: NetworkState,
    pub tau: Vec<f64>,
    pub sigma: Vec<f64>,
    pub iteration: u64,
    pub seed: u64,
}

/// Subtracts column means. Columns already centered to within rounding are
/// left bit-for-bit untouched, so re-centering is idempotent.
pub fn center_columns(m: &mut DMatrix<f64>) {
    let n = m.nrows() as f64;
    for mut col in m.column_iter_mut() {
        let mean = col.sum() / n;
        let scale = col.amax().max(f64::MIN_POSITIVE);
        if mean.abs() > 1e-14 * scale {
            col.add_scalar_mut(-mean);
        }
    }
}
