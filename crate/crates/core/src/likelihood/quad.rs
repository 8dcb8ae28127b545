//! Adaptive Gauss–Kronrod quadrature, plus a log-space integrator for
//! log-concave integrands on (possibly infinite) intervals.
//!
//! The log-space routine locates the mode, measures the width of the peak on
//! each side and integrates `exp(logf - max)` over the region where the
//! integrand is within `exp(-TAIL_DROP)` of its maximum. Nesting calls gives
//! low-dimensional integrals over coefficient spaces.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const TAIL_DROP: f64 = 46.0;
const MAX_DEPTH: usize = 40;

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, (kron - gauss).abs() * h)
}

/// Bisections allowed per top-level integral; noisy integrands whose error
/// estimate never reaches the tolerance stop here instead of recursing on.
const MAX_SPLITS: usize = 4096;

fn adapt<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
    whole: (f64, f64),
    budget: &mut usize,
) -> (f64, f64) {
    let (val, err) = whole;
    // an error estimate already at rounding level cannot be refined further
    let floor = 50.0 * f64::EPSILON * val.abs();
    if err <= tol.max(floor)
        || depth >= MAX_DEPTH
        || *budget == 0
        || (b - a).abs() <= 1e-14 * a.abs().max(b.abs()).max(1e-300)
    {
        return (val, err);
    }
    *budget -= 1;
    let m = 0.5 * (a + b);
    let left = gk15(f, a, m);
    let right = gk15(f, m, b);
    let (lv, le) = adapt(f, a, m, 0.5 * tol, depth + 1, left, budget);
    let (rv, re) = adapt(f, m, b, 0.5 * tol, depth + 1, right, budget);
    (lv + rv, le + re)
}

/// Adaptive G7–K15 integral of `f` over the finite interval `[a, b]`.
/// Returns `(value, error_estimate)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let first = gk15(&mut f, a, b);
    let tol = abs_tol.max(rel_tol * first.0.abs());
    adapt(&mut f, a, b, tol, 0, first, &mut MAX_SPLITS.clone())
}

/// Result of a log-space integral: `log_value = ln ∫ exp(logf)`.
#[derive(Debug, Clone, Copy)]
pub struct LogIntegral {
    pub log_value: f64,
    /// Estimated relative error of `exp(log_value)`.
    pub rel_error: f64,
}

struct Probe<F> {
    logf: F,
    lo: f64,
    hi: f64,
}

impl<F: FnMut(f64) -> f64> Probe<F> {
    fn eval(&mut self, x: f64) -> f64 {
        let v = (self.logf)(x.clamp(self.lo, self.hi));
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    /// Mode of a unimodal function on `[lo, hi]`.
    fn mode(&mut self, start: f64, scale: f64) -> (f64, f64) {
        let (lo, hi) = (self.lo, self.hi);
        let x0 = start.clamp(lo, hi);
        let f0 = self.eval(x0);
        let mut step = scale;
        let xr = (x0 + step).min(hi);
        let xl = (x0 - step).max(lo);
        let fr = self.eval(xr);
        let fl = self.eval(xl);
        let (mut l, mut r) = if fr > f0 || fl > f0 {
            let dir = if fr > f0 { 1.0 } else { -1.0 };
            let (mut prev, mut cur, mut fcur) = if dir > 0.0 { (x0, xr, fr) } else { (x0, xl, fl) };
            loop {
                if cur == lo || cur == hi {
                    break (prev.min(cur), prev.max(cur));
                }
                step *= 2.0;
                let next = (cur + dir * step).clamp(lo, hi);
                let fnext = self.eval(next);
                if fnext <= fcur {
                    break (prev.min(next), prev.max(next));
                }
                prev = cur;
                cur = next;
                fcur = fnext;
            }
        } else {
            (xl, xr)
        };
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut x1 = r - INV_PHI * (r - l);
        let mut x2 = l + INV_PHI * (r - l);
        let mut f1 = self.eval(x1);
        let mut f2 = self.eval(x2);
        for _ in 0..200 {
            if (r - l) <= 1e-10 * (scale + l.abs().max(r.abs())) {
                break;
            }
            if f1 < f2 {
                l = x1;
                x1 = x2;
                f1 = f2;
                x2 = l + INV_PHI * (r - l);
                f2 = self.eval(x2);
            } else {
                r = x2;
                x2 = x1;
                f2 = f1;
                x1 = r - INV_PHI * (r - l);
                f1 = self.eval(x1);
            }
        }
        let mut best = (x0, f0);
        for cand in [(x1, f1), (x2, f2), (l, self.eval(l)), (r, self.eval(r))] {
            if cand.1 > best.1 {
                best = cand;
            }
        }
        best
    }

    /// Distance from the mode `m` in direction `dir` at which the function has
    /// dropped by `drop` (or the domain edge).
    fn reach(&mut self, m: f64, peak: f64, dir: f64, drop: f64, from: f64) -> f64 {
        let edge = if dir > 0.0 { self.hi - m } else { m - self.lo };
        if edge <= 0.0 {
            return 0.0;
        }
        let mut d = from.min(edge);
        loop {
            let v = self.eval(m + dir * d);
            if v < peak - drop {
                break;
            }
            if d >= edge {
                return edge;
            }
            d = (d * 2.0).min(edge);
        }
        // Bisect between d/2 and d for the crossing.
        let mut inner = 0.5 * d;
        let mut outer = d;
        for _ in 0..30 {
            let mid = 0.5 * (inner + outer);
            if self.eval(m + dir * mid) < peak - drop {
                outer = mid;
            } else {
                inner = mid;
            }
            if outer - inner <= 1e-3 * outer {
                break;
            }
        }
        outer
    }
}

/// `ln ∫_lo^hi exp(logf(x)) dx` for a log-concave `logf`.
///
/// `start` is a guess at the mode and `scale` a guess at the peak width; both
/// only affect the cost, not the answer.
pub fn integrate_log_concave<F: FnMut(f64) -> f64>(
    logf: F,
    lo: f64,
    hi: f64,
    start: f64,
    scale: f64,
    rel_tol: f64,
) -> LogIntegral {
    assert!(lo < hi, "empty integration interval");
    let mut probe = Probe { logf, lo, hi };
    let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    let (m, peak) = probe.mode(start, scale);
    if peak == f64::NEG_INFINITY {
        return LogIntegral { log_value: f64::NEG_INFINITY, rel_error: 0.0 };
    }
    let tiny = 1e-9 * (1.0 + m.abs());
    let mut pieces = Vec::with_capacity(6);
    for dir in [-1.0, 1.0] {
        let unit = probe.reach(m, peak, dir, 1.0, tiny.max(1e-12 * scale));
        if unit == 0.0 {
            continue;
        }
        let tail = probe.reach(m, peak, dir, TAIL_DROP, unit);
        let mid = unit.max(tail.min(4.0 * unit));
        let pts = [0.0, unit, mid, tail];
        for w in pts.windows(2) {
            if w[1] > w[0] {
                let (a, b) = (m + dir * w[0], m + dir * w[1]);
                pieces.push(if a < b { (a, b) } else { (b, a) });
            }
        }
    }
    let mut f = |x: f64| (probe.eval(x) - peak).exp();
    let mut coarse = Vec::with_capacity(pieces.len());
    let mut total = 0.0;
    for &(a, b) in &pieces {
        let r = gk15(&mut f, a, b);
        total += r.0;
        coarse.push(r);
    }
    let tol_total = rel_tol * total.max(1e-300);
    let mut value = 0.0;
    let mut err = 0.0;
    let mut budget = MAX_SPLITS;
    for (&(a, b), first) in pieces.iter().zip(coarse) {
        let (v, e) = adapt(&mut f, a, b, tol_total / pieces.len() as f64, 0, first, &mut budget);
        value += v;
        err += e;
    }
    LogIntegral {
        log_value: peak + value.ln(),
        rel_error: err / value.max(1e-300),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_polynomial_exact() {
        let (v, _) = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 1e-14, 1e-14);
        assert!((v - 16.0).abs() < 1e-12);
    }

    #[test]
    fn log_gaussian_integral_matches_normalizer() {
        for &(mu, s) in &[(0.0, 1.0), (3.0, 1e-4), (-50.0, 20.0), (1e3, 0.5)] {
            let r = integrate_log_concave(
                |x| -0.5 * ((x - mu) / s).powi(2),
                f64::NEG_INFINITY,
                f64::INFINITY,
                0.0,
                1.0,
                1e-12,
            );
            let expect = (s * (2.0 * std::f64::consts::PI).sqrt()).ln();
            assert!((r.log_value - expect).abs() < 1e-10, "{mu} {s}: {} vs {}", r.log_value, expect);
        }
    }

    #[test]
    fn half_line_exponential_and_tiny_values() {
        // ∫_0^∞ λ e^{-λx} dx = 1, shifted far into underflow territory.
        for &lam in &[1e-3f64, 1.0, 250.0] {
            let r = integrate_log_concave(|x| lam.ln() - lam * x - 2000.0, 0.0, f64::INFINITY, 1.0, 1.0, 1e-12);
            assert!((r.log_value + 2000.0).abs() < 1e-10, "{lam}: {}", r.log_value);
        }
        // Truncated Gaussian mass: ∫_0^∞ φ(x - μ) with μ = -30.
        let r = integrate_log_concave(
            |x| crate::likelihood::normal::log_norm_pdf(x + 30.0),
            0.0,
            f64::INFINITY,
            0.0,
            1.0,
            1e-12,
        );
        let expect = crate::likelihood::normal::log_norm_cdf(-30.0);
        assert!((r.log_value - expect).abs() < 1e-9, "{} {}", r.log_value, expect);
    }
}
