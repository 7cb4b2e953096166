//! Strong-Wolfe line search: a bracketing phase that extrapolates until an
//! interval containing an acceptable step is found, followed by a zooming
//! phase that shrinks it by safeguarded cubic interpolation.
//!
//! All routines minimize `φ`.

use super::config::OptimConfig;

/// `φ` and `φ′` at one step length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub alpha: f64,
    pub phi: f64,
    pub dphi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOk {
    pub alpha: f64,
    pub phi: f64,
    pub dphi: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Bracketing,
    Zooming,
}

/// Diagnostics for a line search that ran out of iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchFailure {
    pub phase: Phase,
    pub bracket: (f64, f64),
    pub phi_bracket: (f64, f64),
    pub phi0: f64,
    pub dphi0: f64,
    pub evals: usize,
}

pub const MIN_STEP: f64 = 1e-10;
pub const MAX_STEP: f64 = 1e10;

/// First trial step `2 (f_k − f_{k−1}) / φ′(0)`, falling back to
/// `1 / √(−φ′(0))` when there is no previous value or the formula is not
/// positive and finite. Result clamped to `[1e-10, 1e10]`.
pub fn initial_step(f_k: f64, f_km1: Option<f64>, dphi0: f64) -> f64 {
    let formula = f_km1.map(|prev| 2.0 * (f_k - prev) / dphi0);
    let alpha = match formula {
        Some(a) if a.is_finite() && a > 0.0 => a,
        _ => 1.0 / (-dphi0).sqrt(),
    };
    if alpha.is_nan() {
        return 1.0;
    }
    alpha.clamp(MIN_STEP, MAX_STEP)
}

/// Minimizer of the cubic Hermite interpolant through `(a, fa, ga)` and
/// `(b, fb, gb)`, or `None` when it has no local minimum.
pub fn cubic_minimizer(a: Sample, b: Sample) -> Option<f64> {
    let values = [a.alpha, a.phi, a.dphi, b.alpha, b.phi, b.dphi];
    if values.iter().any(|v| !v.is_finite()) || a.alpha == b.alpha {
        return None;
    }
    let d1 = a.dphi + b.dphi - 3.0 * (a.phi - b.phi) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.dphi * b.dphi;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let denom = b.dphi - a.dphi + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let x = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / denom;
    x.is_finite().then_some(x)
}

/// Cubic interpolation inside `[lo.alpha, hi.alpha]` (requires
/// `lo.alpha < hi.alpha`), kept `margin · width` away from both ends.
/// Falls back to the midpoint when the cubic has no minimizer.
pub fn cubic_interpolate(lo: Sample, hi: Sample, margin: f64) -> f64 {
    let w = hi.alpha - lo.alpha;
    match cubic_minimizer(lo, hi) {
        Some(x) => x.clamp(lo.alpha + margin * w, hi.alpha - margin * w),
        None => lo.alpha + 0.5 * w,
    }
}

/// Next bracketing trial beyond `end`, from the cubic through the origin
/// and `end`, kept within `[lo_mult · α, hi_mult · α]`.
pub fn extrapolate(origin: Sample, end: Sample, lo_mult: f64, hi_mult: f64) -> f64 {
    let (lo, hi) = (lo_mult * end.alpha, hi_mult * end.alpha);
    match cubic_minimizer(origin, end) {
        Some(x) => x.clamp(lo, hi),
        None => hi,
    }
}

/// Finds `α` with `φ(α) ≤ φ(0) + c1 α φ′(0)` and `|φ′(α)| ≤ c2 |φ′(0)|`.
///
/// `eval` returns `(φ(α), φ′(α))`; a non-finite `φ` is treated as a failed
/// sufficient-decrease test.
pub fn wolfe_linesearch<F>(
    mut eval: F,
    phi0: f64,
    dphi0: f64,
    alpha1: f64,
    cfg: &OptimConfig,
) -> Result<LineSearchOk, LineSearchFailure>
where
    F: FnMut(f64) -> (f64, f64),
{
    let origin = Sample {
        alpha: 0.0,
        phi: phi0,
        dphi: dphi0,
    };
    let fail = |phase, a: Sample, b: Sample, evals| LineSearchFailure {
        phase,
        bracket: (a.alpha, b.alpha),
        phi_bracket: (a.phi, b.phi),
        phi0,
        dphi0,
        evals,
    };
    if !(dphi0 < 0.0) || !phi0.is_finite() || !(alpha1 > 0.0) {
        return Err(fail(Phase::Bracketing, origin, origin, 0));
    }
    let armijo = |s: &Sample| !(s.phi <= phi0 + cfg.c1 * s.alpha * dphi0);
    let curvature_ok = |s: &Sample| s.dphi.abs() <= -cfg.c2 * dphi0;

    let mut evals = 0;
    let mut sample = |alpha: f64, evals: &mut usize| {
        *evals += 1;
        let (phi, dphi) = eval(alpha);
        Sample { alpha, phi, dphi }
    };

    let mut prev = origin;
    let mut alpha = alpha1;
    let mut bracket = None;
    for i in 1..=cfg.ls_max_iters {
        let cur = sample(alpha, &mut evals);
        if armijo(&cur) || (i > 1 && cur.phi >= prev.phi) {
            bracket = Some((prev, cur));
            break;
        }
        if curvature_ok(&cur) {
            return Ok(LineSearchOk {
                alpha: cur.alpha,
                phi: cur.phi,
                dphi: cur.dphi,
                evals,
            });
        }
        if cur.dphi >= 0.0 {
            bracket = Some((cur, prev));
            break;
        }
        alpha = extrapolate(origin, cur, cfg.extrap_lo, cfg.extrap_hi);
        prev = cur;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Err(fail(Phase::Bracketing, prev, prev, evals));
    };

    for _ in 0..cfg.ls_max_iters {
        let (left, right) = if lo.alpha < hi.alpha { (lo, hi) } else { (hi, lo) };
        let trial = cubic_interpolate(left, right, cfg.interp_margin);
        let cur = sample(trial, &mut evals);
        if armijo(&cur) || cur.phi >= lo.phi {
            hi = cur;
        } else {
            if curvature_ok(&cur) {
                return Ok(LineSearchOk {
                    alpha: cur.alpha,
                    phi: cur.phi,
                    dphi: cur.dphi,
                    evals,
                });
            }
            if cur.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    Err(fail(Phase::Zooming, lo, hi, evals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::rng;
    use rand::Rng;

    fn s(alpha: f64, phi: f64, dphi: f64) -> Sample {
        Sample { alpha, phi, dphi }
    }

    #[test]
    fn initial_step_examples() {
        let a = initial_step(3.0, Some(3.0), -4.0);
        assert_eq!(a, 0.5);
        assert_eq!(initial_step(0.0, Some(1.0), -2.0), 1.0);
        assert_eq!(initial_step(0.0, None, -4.0), 0.5);
        assert_eq!(initial_step(0.0, Some(-1.0), -1e-40), MAX_STEP);
        assert_eq!(initial_step(0.0, Some(1e-30), -1e30), MIN_STEP);
    }

    #[test]
    fn cubic_reproduces_quadratic() {
        let f = |a: f64| ((a - 2.0).powi(2), 2.0 * (a - 2.0));
        let (f0, g0) = f(0.0);
        let (f3, g3) = f(3.0);
        let x = cubic_interpolate(s(0.0, f0, g0), s(3.0, f3, g3), 0.1);
        assert!((x - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_clamps_to_margin() {
        // linear data: no minimizer, bisect
        let x = cubic_interpolate(s(0.0, 0.0, -1.0), s(1.0, -1.0, -1.0), 0.1);
        assert_eq!(x, 0.5);
        // decreasing throughout, minimizer beyond the right end
        let x = cubic_interpolate(s(0.0, 0.0, -3.0), s(1.0, -2.0, -0.5), 0.1);
        assert!((x - 0.9).abs() < 1e-15);
        // (α+1)²: minimizer left of the interval
        let x = cubic_interpolate(s(0.0, 1.0, 2.0), s(1.0, 4.0, 4.0), 0.1);
        assert!((x - 0.1).abs() < 1e-15);
    }

    #[test]
    fn cubic_recovers_random_interior_minimum() {
        // φ(α) = a(α−r)³ + b(α−r)² + c; take r1 < m < r2 where m is the known
        // minimizer: φ′ = 3a(α−r)² + 2b(α−r) vanishes at α = r and α = r − 2b/(3a).
        let mut r = rng(81);
        for _ in 0..100 {
            let a: f64 = r.random_range(0.1..2.0) * if r.random::<bool>() { 1.0 } else { -1.0 };
            let b: f64 = r.random_range(0.5..3.0);
            let root: f64 = r.random_range(-2.0..2.0);
            let other = root - 2.0 * b / (3.0 * a);
            // φ″(root) = 2b > 0, so `root` is the local minimizer
            let m = root;
            let phi = |x: f64| a * (x - root).powi(3) + b * (x - root).powi(2) + 1.0;
            let dphi = |x: f64| 3.0 * a * (x - root).powi(2) + 2.0 * b * (x - root);
            let half = 0.4 * (other - root).abs();
            let (lo, hi) = (m - r.random_range(0.1..1.0) * half, m + r.random_range(0.1..1.0) * half);
            let x = cubic_minimizer(s(lo, phi(lo), dphi(lo)), s(hi, phi(hi), dphi(hi))).unwrap();
            assert!((x - m).abs() < 1e-10, "{x} vs {m}");
        }
    }

    #[test]
    fn exact_minimizer_accepted_immediately() {
        let cfg = OptimConfig::default();
        let mut calls = 0;
        let res = wolfe_linesearch(
            |a| {
                calls += 1;
                ((a - 1.0).powi(2), 2.0 * (a - 1.0))
            },
            1.0,
            -2.0,
            1.0,
            &cfg,
        )
        .unwrap();
        assert_eq!(res.alpha, 1.0);
        assert_eq!(calls, 1);
    }

    #[test]
    fn unbounded_descent_fails_after_geometric_growth() {
        let cfg = OptimConfig::default();
        let mut trials = Vec::new();
        let err = wolfe_linesearch(
            |a| {
                trials.push(a);
                (-a, -1.0)
            },
            0.0,
            -1.0,
            1.0,
            &cfg,
        )
        .unwrap_err();
        assert_eq!(err.phase, Phase::Bracketing);
        assert_eq!(trials.len(), cfg.ls_max_iters);
        for w in trials.windows(2) {
            assert!(w[1] >= cfg.extrap_lo * w[0] - 1e-9);
        }
    }

    #[test]
    fn rejects_ascent_direction() {
        let cfg = OptimConfig::default();
        assert!(wolfe_linesearch(|a| (a, 1.0), 0.0, 1.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn found_steps_satisfy_strong_wolfe() {
        let cfg = OptimConfig::default();
        let mut r = rng(82);
        for _ in 0..200 {
            // φ(α) = −α e^{−cα} + q α²: smooth, bounded below, one or two bumps
            let c: f64 = r.random_range(0.1..5.0);
            let q: f64 = r.random_range(0.0..1.0);
            let phi = |a: f64| -a * (-c * a).exp() + q * a * a;
            let dphi = |a: f64| -(-c * a).exp() + c * a * (-c * a).exp() + 2.0 * q * a;
            let a1 = 10f64.powf(r.random_range(-3.0..3.0));
            let res = wolfe_linesearch(|a| (phi(a), dphi(a)), 0.0, -1.0, a1, &cfg).unwrap();
            assert!(phi(res.alpha) <= -(cfg.c1 * res.alpha));
            assert!(dphi(res.alpha).abs() <= cfg.c2);
        }
    }

    #[test]
    fn non_finite_values_shrink_the_step() {
        let cfg = OptimConfig::default();
        let res = wolfe_linesearch(
            |a| if a > 2.0 { (f64::INFINITY, f64::NAN) } else { ((a - 1.5).powi(2), 2.0 * (a - 1.5)) },
            2.25,
            -3.0,
            100.0,
            &cfg,
        )
        .unwrap();
        assert!(res.alpha <= 2.0);
        assert!((2.0 * (res.alpha - 1.5)).abs() <= 0.9 * 3.0);
    }
}
