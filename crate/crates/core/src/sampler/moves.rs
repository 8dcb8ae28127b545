//! Network proposals and their exact proposal probabilities.
//!
//! A move picks a matrix, then either flips one eligible cell or swaps an
//! eligible one cell with an eligible zero cell. When a swap is impossible the
//! kernel falls back to a flip of the same matrix, and when nothing is
//! eligible the move is null. The fallback makes the kernel slightly
//! asymmetric near those boundaries, so [`proposal_log_prob`] gives the exact
//! probability for the Hastings correction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ChainConfig, SwapScope};
use crate::model::{Hyperparams, Matrix, NetworkState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    AddDelete,
    Swap,
    /// Nothing eligible; the state is left as is.
    Null,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MoveProposal {
    pub kind: MoveKind,
    pub target: Matrix,
    /// One cell for `AddDelete`; `[one cell, zero cell]` for `Swap`.
    pub cells: Vec<(usize, usize)>,
}

impl MoveProposal {
    pub fn is_null(&self) -> bool {
        self.kind == MoveKind::Null
    }

    pub fn apply(&self, net: &mut NetworkState) {
        for &(g, m) in &self.cells {
            net.flip(self.target, g, m);
        }
    }

    /// The move that undoes this one.
    pub fn reverse(&self) -> Self {
        let mut cells = self.cells.clone();
        cells.reverse();
        Self { kind: self.kind, target: self.target, cells }
    }

    /// Distinct targets touched, ascending.
    pub fn genes(&self) -> Vec<usize> {
        let mut gs: Vec<usize> = self.cells.iter().map(|c| c.0).collect();
        gs.sort_unstable();
        gs.dedup();
        gs
    }
}

fn matrix_probs(cfg: &ChainConfig, hp: &Hyperparams) -> Vec<(Matrix, f64)> {
    if cfg.time_dependent() {
        let side = 0.5 * (1.0 - hp.lambda);
        vec![(Matrix::R, hp.lambda), (Matrix::Rp, side), (Matrix::Rpp, side)]
    } else {
        vec![(Matrix::R, 1.0)]
    }
}

fn matrix_prob(cfg: &ChainConfig, hp: &Hyperparams, t: Matrix) -> f64 {
    matrix_probs(cfg, hp).into_iter().find(|(m, _)| *m == t).map_or(0.0, |(_, p)| p)
}

/// Whether cell `(g, m)` of `t` may change, given the nesting constraint.
///
/// Flips and swaps within `t` never change eligibility within `t`, which is
/// what keeps the kernel symmetric on the constrained space.
pub fn eligible(net: &NetworkState, cfg: &ChainConfig, t: Matrix, g: usize, m: usize) -> bool {
    if !(cfg.time_dependent() && cfg.constrained) {
        return true;
    }
    match t {
        Matrix::R => !net.matrix(Matrix::Rp).get(g, m) && !net.matrix(Matrix::Rpp).get(g, m),
        Matrix::Rp | Matrix::Rpp => net.r.get(g, m),
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    ones: usize,
    zeros: usize,
}

fn row_counts(net: &NetworkState, cfg: &ChainConfig, t: Matrix, g: usize) -> Counts {
    let ind = net.matrix(t);
    let mut c = Counts::default();
    for m in 0..net.m() {
        if eligible(net, cfg, t, g, m) {
            if ind.get(g, m) {
                c.ones += 1;
            } else {
                c.zeros += 1;
            }
        }
    }
    c
}

fn counts(net: &NetworkState, cfg: &ChainConfig, t: Matrix) -> Counts {
    if !(cfg.time_dependent() && cfg.constrained) {
        let ones: usize = (0..net.g()).map(|g| net.row_count(t, g)).sum();
        return Counts { ones, zeros: net.g() * net.m() - ones };
    }
    (0..net.g()).fold(Counts::default(), |acc, g| {
        let r = row_counts(net, cfg, t, g);
        Counts { ones: acc.ones + r.ones, zeros: acc.zeros + r.zeros }
    })
}

/// The `idx`-th eligible cell (row-major) whose value is `value`,
/// or with any value when `value` is `None`.
fn nth_cell(
    net: &NetworkState,
    cfg: &ChainConfig,
    t: Matrix,
    value: Option<bool>,
    mut idx: usize,
    row: Option<usize>,
) -> (usize, usize) {
    let ind = net.matrix(t);
    let rows = match row {
        Some(g) => g..g + 1,
        None => 0..net.g(),
    };
    for g in rows {
        for m in 0..net.m() {
            if eligible(net, cfg, t, g, m) && value.is_none_or(|v| ind.get(g, m) == v) {
                if idx == 0 {
                    return (g, m);
                }
                idx -= 1;
            }
        }
    }
    unreachable!("cell index beyond eligible set")
}

/// Probability that a swap drawn from `net` has to fall back to a flip.
fn swap_failure(net: &NetworkState, cfg: &ChainConfig, t: Matrix) -> f64 {
    let c = counts(net, cfg, t);
    if c.ones == 0 {
        return 1.0;
    }
    match cfg.swap_scope {
        SwapScope::Global => {
            if c.zeros == 0 {
                1.0
            } else {
                0.0
            }
        }
        SwapScope::Row => {
            let stuck: usize = (0..net.g())
                .map(|g| row_counts(net, cfg, t, g))
                .filter(|r| r.zeros == 0)
                .map(|r| r.ones)
                .sum();
            stuck as f64 / c.ones as f64
        }
    }
}

/// Draws a network move for the current state.
pub fn propose_network_move<R: Rng + ?Sized>(
    net: &NetworkState,
    cfg: &ChainConfig,
    hp: &Hyperparams,
    rng: &mut R,
) -> MoveProposal {
    let probs = matrix_probs(cfg, hp);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut target = probs[probs.len() - 1].0;
    for &(m, p) in &probs {
        acc += p;
        if u < acc {
            target = m;
            break;
        }
    }
    let c = counts(net, cfg, target);
    if rng.random::<f64>() >= hp.phi && c.ones > 0 {
        let one = nth_cell(net, cfg, target, Some(true), rng.random_range(0..c.ones), None);
        let zeros_avail = match cfg.swap_scope {
            SwapScope::Global => c.zeros,
            SwapScope::Row => row_counts(net, cfg, target, one.0).zeros,
        };
        if zeros_avail > 0 {
            let row = (cfg.swap_scope == SwapScope::Row).then_some(one.0);
            let zero = nth_cell(net, cfg, target, Some(false), rng.random_range(0..zeros_avail), row);
            return MoveProposal { kind: MoveKind::Swap, target, cells: vec![one, zero] };
        }
    }
    let total = c.ones + c.zeros;
    if total == 0 {
        return MoveProposal { kind: MoveKind::Null, target, cells: Vec::new() };
    }
    let cell = nth_cell(net, cfg, target, None, rng.random_range(0..total), None);
    MoveProposal { kind: MoveKind::AddDelete, target, cells: vec![cell] }
}

/// `ln q(net → net')` for a non-null move drawn by [`propose_network_move`].
pub fn proposal_log_prob(net: &NetworkState, cfg: &ChainConfig, hp: &Hyperparams, mv: &MoveProposal) -> f64 {
    let t = mv.target;
    let pt = matrix_prob(cfg, hp, t).ln();
    let c = counts(net, cfg, t);
    match mv.kind {
        MoveKind::Null => f64::NEG_INFINITY,
        MoveKind::AddDelete => {
            let flip = hp.phi + (1.0 - hp.phi) * swap_failure(net, cfg, t);
            pt + flip.ln() - ((c.ones + c.zeros) as f64).ln()
        }
        MoveKind::Swap => {
            let zeros = match cfg.swap_scope {
                SwapScope::Global => c.zeros,
                SwapScope::Row => row_counts(net, cfg, t, mv.cells[0].0).zeros,
            };
            pt + (1.0 - hp.phi).ln() - (c.ones as f64).ln() - (zeros as f64).ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Indicator;
    use crate::sampler::config::Mode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn td_cfg() -> ChainConfig {
        ChainConfig { mode: Mode::TimeDependent, ..ChainConfig::default() }
    }

    #[test]
    fn empty_network_swap_falls_back_to_add() {
        let net = NetworkState::empty(3, 4, false);
        let hp = Hyperparams { phi: 0.0, ..Hyperparams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let mv = propose_network_move(&net, &ChainConfig::default(), &hp, &mut rng);
            assert_eq!(mv.kind, MoveKind::AddDelete);
            let mut next = net.clone();
            mv.apply(&mut next);
            assert_eq!(next.r.count(), 1);
        }
    }

    #[test]
    fn swaps_preserve_edge_count() {
        let net = NetworkState::from_indicators(Indicator::from_fn(4, 5, |g, m| (g * m) % 3 == 1), None, None).unwrap();
        let hp = Hyperparams { phi: 0.0, ..Hyperparams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let mv = propose_network_move(&net, &ChainConfig::default(), &hp, &mut rng);
            assert_eq!(mv.kind, MoveKind::Swap);
            let mut next = net.clone();
            mv.apply(&mut next);
            assert_eq!(next.r.count(), net.r.count());
        }
    }

    /// Empirical proposal frequencies must match `proposal_log_prob`.
    fn check_frequencies(net: &NetworkState, cfg: &ChainConfig, hp: &Hyperparams) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 200_000;
        let mut seen: HashMap<MoveProposal, usize> = HashMap::new();
        for _ in 0..draws {
            let mv = propose_network_move(net, cfg, hp, &mut rng);
            *seen.entry(mv).or_default() += 1;
        }
        let mut total = 0.0;
        for (mv, n) in &seen {
            if mv.is_null() {
                continue;
            }
            let p = proposal_log_prob(net, cfg, hp, mv).exp();
            total += p;
            let f = *n as f64 / draws as f64;
            assert!((f - p).abs() < 5.0 * (p / draws as f64).sqrt() + 1e-4, "{mv:?}: {f} vs {p}");
        }
        assert!((total - 1.0).abs() < 1e-12 || seen.keys().any(MoveProposal::is_null), "{total}");
    }

    #[test]
    fn proposal_probabilities_match_sampling() {
        let hp = Hyperparams::default();
        let net = NetworkState::from_indicators(Indicator::from_fn(2, 3, |g, m| g == 0 && m < 2), None, None).unwrap();
        check_frequencies(&net, &ChainConfig::default(), &hp);
        let row = ChainConfig { swap_scope: SwapScope::Row, ..ChainConfig::default() };
        let full_row = NetworkState::from_indicators(Indicator::from_fn(2, 3, |g, m| g == 0 || m == 0), None, None).unwrap();
        check_frequencies(&full_row, &row, &hp);
        let r = Indicator::from_fn(2, 3, |_, m| m != 1);
        let rp = Indicator::from_fn(2, 3, |g, m| g == 0 && m == 0);
        let td = NetworkState::from_indicators(r, Some(rp), Some(Indicator::zeros(2, 3))).unwrap();
        check_frequencies(&td, &td_cfg(), &hp);
    }

    #[test]
    fn constrained_moves_never_break_nesting() {
        let hp = Hyperparams::default();
        let cfg = td_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = NetworkState::empty(4, 5, true);
        for _ in 0..100_000 {
            let mv = propose_network_move(&net, &cfg, &hp, &mut rng);
            mv.apply(&mut net);
            net.check(true).unwrap();
        }
    }
}
