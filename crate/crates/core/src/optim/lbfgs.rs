//! Limited-memory Riemannian BFGS.
//!
//! Curvature pairs live in the tangent space of the iterate they were formed
//! at. Applying the inverse-Hessian approximation recurses from the newest
//! pair to the oldest, carrying the working vector back along each step's
//! transport and the result forward again.

use std::collections::VecDeque;
use std::time::Instant;

use super::linesearch::initial_step;
use super::{evaluate, line_step, FitReport, Objective, Observer, OptimConfig, StepEvent, Termination};
use crate::error::Result;
use crate::product::{ProductPoint, ProductTangent, ProductTransport};

/// Pairs whose curvature `g(S,Y)` falls below this multiple of `‖S‖‖Y‖` are
/// not stored.
pub const CURVATURE_TOL: f64 = 1e-10;

/// One stored `(S, Y)` pair at iterate `X_{k+1}`.
#[derive(Debug, Clone)]
pub struct PairRecord {
    /// `X_{k+1}`, where `s` and `y` live.
    pub point: ProductPoint,
    /// Transport from `X_k` to `X_{k+1}`.
    pub step: ProductTransport,
    pub s: ProductTangent,
    pub y: ProductTangent,
    pub sy: f64,
    pub ss_over_sy: f64,
}

#[derive(Debug, Clone)]
pub struct LbfgsHistory {
    memory: usize,
    records: VecDeque<PairRecord>,
    pub h_diag: f64,
}

impl LbfgsHistory {
    pub fn new(memory: usize, h_diag: f64) -> Self {
        Self {
            memory,
            records: VecDeque::with_capacity(memory),
            h_diag,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn clear(&mut self) {
        self.records.clear();
    }

    pub fn records(&self) -> impl Iterator<Item = &PairRecord> {
        self.records.iter()
    }

    /// Stores the pair if it satisfies the curvature condition, updating
    /// `h_diag = g(S,Y)/g(Y,Y)`. Returns whether it was stored.
    pub fn push_pair(
        &mut self,
        point: ProductPoint,
        step: ProductTransport,
        s: ProductTangent,
        y: ProductTangent,
    ) -> Result<bool> {
        let sy = point.metric(&s, &y)?;
        let ss = point.metric(&s, &s)?;
        let yy = point.metric(&y, &y)?;
        if !(sy > CURVATURE_TOL * ss.sqrt() * yy.sqrt()) || !(yy > 0.0) {
            return Ok(false);
        }
        self.h_diag = sy / yy;
        if self.records.len() == self.memory {
            self.records.pop_front();
        }
        self.records.push_back(PairRecord {
            point,
            step,
            s,
            y,
            sy,
            ss_over_sy: ss / sy,
        });
        Ok(true)
    }
}

/// Applies the inverse-Hessian approximation to `p`, a tangent vector at the
/// newest stored iterate (or at any point when the history is empty).
pub fn hess_mul(p: &ProductTangent, history: &LbfgsHistory) -> Result<ProductTangent> {
    recurse(p, history, history.len())
}

fn recurse(p: &ProductTangent, h: &LbfgsHistory, depth: usize) -> Result<ProductTangent> {
    if depth == 0 {
        return Ok(p.scaled(h.h_diag));
    }
    let r = &h.records[depth - 1];
    let a = r.point.metric(&r.s, p)? / r.sy;
    let mut pk = p.clone();
    pk.axpy(-a, &r.y);
    let inner = if depth > 1 {
        r.step.apply(&recurse(&r.step.apply_inverse(&pk), h, depth - 1)?)
    } else {
        recurse(&pk, h, 0)?
    };
    let b = r.point.metric(&r.y, &inner)? / r.sy;
    let mut out = inner;
    out.axpy(a - b, &r.s);
    Ok(out)
}

pub fn lbfgs_fit<O: Objective + ?Sized>(
    obj: &O,
    x0: ProductPoint,
    cfg: &OptimConfig,
) -> Result<FitReport<ProductPoint>> {
    lbfgs_fit_observed(obj, x0, cfg, &mut |_: &StepEvent<'_>| {})
}

pub fn lbfgs_fit_observed<O: Objective + ?Sized>(
    obj: &O,
    x0: ProductPoint,
    cfg: &OptimConfig,
    observer: &mut dyn Observer,
) -> Result<FitReport<ProductPoint>> {
    cfg.validate()?;
    let start = Instant::now();
    let mut cur = evaluate(obj, x0)?;
    let mut trace = vec![cur.value];
    let g0 = cur.x.norm(&cur.grad)?;
    let mut history = LbfgsHistory::new(cfg.memory, if g0 > 0.0 { 1.0 / g0 } else { 1.0 });
    let mut f_prev = None;
    let mut iterations = 0;

    let termination = loop {
        if iterations >= cfg.max_iters {
            break Termination::MaxIters;
        }
        if cur.x.norm(&cur.grad)? <= cfg.grad_tol {
            break Termination::Tolerance;
        }
        let steepest = cur.grad.scaled(-1.0);
        let mut dir = hess_mul(&steepest, &history)?;
        let mut dphi0 = cur.x.metric(&cur.grad, &dir)?;
        let restarted = !(dphi0 < 0.0) || !dir.is_finite();
        if restarted {
            history.clear();
            dir = steepest.scaled(history.h_diag);
            dphi0 = cur.x.metric(&cur.grad, &dir)?;
        }
        let alpha1 = initial_step(-cur.value, f_prev, dphi0);
        let acc = match line_step(obj, &cur, &dir, dphi0, alpha1, cfg)? {
            Ok(acc) => acc,
            Err(_) => break Termination::LineSearchFailure,
        };
        observer.on_step(&StepEvent {
            iteration: iterations,
            point: &cur.x,
            direction: &dir,
            alpha: acc.ls.alpha,
            phi0: -cur.value,
            dphi0,
            phi: acc.ls.phi,
            dphi: acc.ls.dphi,
            restarted,
            evals: acc.ls.evals,
        });

        let step = acc.ray.transport(acc.ls.alpha);
        let s = acc.ray.velocity(acc.ls.alpha).scaled(acc.ls.alpha);
        let y = acc.state.grad.sub(&step.apply(&cur.grad));
        history.push_pair(acc.state.x.clone(), step, s, y)?;

        f_prev = Some(-cur.value);
        let old = cur.value;
        cur = acc.state;
        trace.push(cur.value);
        iterations += 1;
        if (cur.value - old).abs() < cfg.tol_avg_ll {
            break Termination::Tolerance;
        }
    };

    Ok(FitReport {
        final_point: cur.x,
        avg_ll_trace: trace,
        iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::ProductPoint;
    use crate::spd::{SpdPoint, TangentVec};
    use crate::testing::{gaussian_vector, random_sym, rng};
    use nalgebra::{DMatrix, DVector};

    fn base(k: usize, d: usize, e: usize) -> ProductPoint {
        ProductPoint::new(vec![SpdPoint::identity(d); k], DVector::zeros(e)).unwrap()
    }

    fn tangent(seed: u64, k: usize, d: usize, e: usize) -> ProductTangent {
        let mut r = rng(seed);
        ProductTangent {
            blocks: (0..k).map(|_| random_sym(&mut r, d)).collect(),
            euclid: gaussian_vector(&mut r, e),
        }
    }

    fn flatten(t: &ProductTangent) -> DVector<f64> {
        let mut v: Vec<f64> = t.blocks.iter().flat_map(|b| b.matrix().iter().copied().collect::<Vec<_>>()).collect();
        v.extend(t.euclid.iter());
        DVector::from_vec(v)
    }

    /// Textbook two-loop recursion on flat vectors.
    fn two_loop(q0: &DVector<f64>, pairs: &[(DVector<f64>, DVector<f64>)], h0: f64) -> DVector<f64> {
        let mut q = q0.clone();
        let mut alphas = vec![0.0; pairs.len()];
        for (i, (s, y)) in pairs.iter().enumerate().rev() {
            alphas[i] = s.dot(&q) / y.dot(s);
            q -= y * alphas[i];
        }
        let mut r = q * h0;
        for (i, (s, y)) in pairs.iter().enumerate() {
            let b = y.dot(&r) / y.dot(s);
            r += s * (alphas[i] - b);
        }
        r
    }

    #[test]
    fn empty_history_scales() {
        let h = LbfgsHistory::new(5, 0.25);
        let p = tangent(1, 2, 3, 1);
        let out = hess_mul(&p, &h).unwrap();
        assert_eq!(out, p.scaled(0.25));
    }

    #[test]
    fn single_pair_satisfies_secant() {
        let x = base(2, 3, 1);
        let s = tangent(2, 2, 3, 1);
        let mut h = LbfgsHistory::new(5, 1.0);
        assert!(h
            .push_pair(x.clone(), ProductTransport::identity(2, 3), s.clone(), s.clone())
            .unwrap());
        let out = hess_mul(&s, &h).unwrap();
        assert!((flatten(&out) - flatten(&s)).amax() < 1e-12);
    }

    #[test]
    fn matches_euclidean_two_loop_with_identity_transports() {
        let x = base(2, 3, 2);
        let mut h = LbfgsHistory::new(10, 1.0);
        let mut pairs = Vec::new();
        for i in 0..4 {
            let s = tangent(10 + i, 2, 3, 2);
            // y = s + small perturbation keeps curvature positive
            let y = s.add(&tangent(20 + i, 2, 3, 2).scaled(0.3));
            if h.push_pair(x.clone(), ProductTransport::identity(2, 3), s.clone(), y.clone()).unwrap() {
                pairs.push((flatten(&s), flatten(&y)));
            }
        }
        assert!(pairs.len() >= 2);
        let p = tangent(30, 2, 3, 2);
        let got = flatten(&hess_mul(&p, &h).unwrap());
        let want = two_loop(&flatten(&p), &pairs, h.h_diag);
        assert!((got - &want).amax() <= 1e-12 * want.amax().max(1.0));
    }

    #[test]
    fn rejects_pairs_without_curvature() {
        let x = base(1, 2, 0);
        let s = tangent(40, 1, 2, 0);
        let mut h = LbfgsHistory::new(3, 1.0);
        assert!(!h
            .push_pair(x.clone(), ProductTransport::identity(1, 2), s.clone(), s.scaled(-1.0))
            .unwrap());
        assert!(h.is_empty());
        assert_eq!(h.h_diag, 1.0);
    }

    #[test]
    fn history_evicts_oldest() {
        let x = base(1, 2, 0);
        let mut h = LbfgsHistory::new(2, 1.0);
        for i in 0..5 {
            let s = ProductTangent {
                blocks: vec![TangentVec::new(DMatrix::identity(2, 2) * (i + 1) as f64).unwrap()],
                euclid: DVector::zeros(0),
            };
            h.push_pair(x.clone(), ProductTransport::identity(1, 2), s.clone(), s).unwrap();
        }
        assert_eq!(h.len(), 2);
        let first = h.records().next().unwrap();
        assert_eq!(first.s.blocks[0].matrix()[(0, 0)], 4.0);
    }
}
