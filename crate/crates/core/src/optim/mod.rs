//! Riemannian L-BFGS and conjugate gradients on [`ProductPoint`]s, driven by
//! a strong-Wolfe line search along exponential-map curves.
//!
//! Objectives are supplied in the maximization view (average
//! log-likelihood). The drivers negate value and gradient once on entry and
//! minimize internally.

mod cg;
mod config;
mod lbfgs;
mod linesearch;

pub use cg::{cg_fit, cg_fit_observed};
pub use config::OptimConfig;
pub use lbfgs::{hess_mul, lbfgs_fit, lbfgs_fit_observed, LbfgsHistory, PairRecord};
pub use linesearch::{
    cubic_interpolate, cubic_minimizer, extrapolate, initial_step, wolfe_linesearch, LineSearchFailure,
    LineSearchOk, Phase, Sample,
};

use serde::{Deserialize, Serialize};

use crate::error::{GmmError, Result};
use crate::product::{EuclideanGrad, ProductPoint, ProductRay, ProductTangent};

/// A smooth function on a product manifold, to be maximized.
pub trait Objective: Sync {
    /// Value and Euclidean gradient at `x`.
    fn value_and_egrad(&self, x: &ProductPoint) -> Result<(f64, EuclideanGrad)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    MaxIters,
    LineSearchFailure,
}

#[derive(Debug, Clone)]
pub struct FitReport<P> {
    pub final_point: P,
    /// Average log-likelihood at the start and after every iteration.
    pub avg_ll_trace: Vec<f64>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub termination: Termination,
}

impl<P> FitReport<P> {
    pub fn final_avg_ll(&self) -> f64 {
        *self.avg_ll_trace.last().expect("trace holds the initial value")
    }

    pub fn map_point<Q>(self, f: impl FnOnce(P) -> Q) -> FitReport<Q> {
        FitReport {
            final_point: f(self.final_point),
            avg_ll_trace: self.avg_ll_trace,
            iterations: self.iterations,
            wall_time_s: self.wall_time_s,
            termination: self.termination,
        }
    }
}

/// One accepted step, reported to an [`Observer`]. `phi*` values are in the
/// minimization view (`−ALL`).
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub iteration: usize,
    pub point: &'a ProductPoint,
    pub direction: &'a ProductTangent,
    pub alpha: f64,
    pub phi0: f64,
    pub dphi0: f64,
    pub phi: f64,
    pub dphi: f64,
    /// The search direction was reset to steepest descent.
    pub restarted: bool,
    pub evals: usize,
}

pub trait Observer {
    fn on_step(&mut self, ev: &StepEvent<'_>);
}

impl<F: FnMut(&StepEvent<'_>)> Observer for F {
    fn on_step(&mut self, ev: &StepEvent<'_>) {
        self(ev)
    }
}

/// Iterate with its (maximization) value and the Riemannian gradient of the
/// minimization objective.
pub(crate) struct State {
    pub x: ProductPoint,
    pub value: f64,
    pub grad: ProductTangent,
}

pub(crate) fn evaluate<O: Objective + ?Sized>(obj: &O, x: ProductPoint) -> Result<State> {
    let (value, mut eg) = obj.value_and_egrad(&x)?;
    if !value.is_finite() {
        return Err(GmmError::NumericalBreakdown(format!("objective is {value}")));
    }
    for b in &mut eg.blocks {
        b.neg_mut();
    }
    eg.euclid.neg_mut();
    let grad = x.egrad_to_rgrad(&eg)?;
    if !grad.is_finite() {
        return Err(GmmError::NumericalBreakdown("non-finite gradient".into()));
    }
    Ok(State { x, value, grad })
}

fn is_numerical(e: &GmmError) -> bool {
    matches!(
        e,
        GmmError::NumericalBreakdown(_) | GmmError::NotSpd(_) | GmmError::NonFiniteSample { .. }
    )
}

pub(crate) struct Accepted {
    pub state: State,
    pub ray: ProductRay,
    pub ls: LineSearchOk,
}

/// Runs the line search along `t ↦ expmap(x, t·dir)`. Trial points where
/// the objective breaks down numerically count as infinitely bad.
pub(crate) fn line_step<O: Objective + ?Sized>(
    obj: &O,
    cur: &State,
    dir: &ProductTangent,
    dphi0: f64,
    alpha1: f64,
    cfg: &OptimConfig,
) -> Result<std::result::Result<Accepted, LineSearchFailure>> {
    let ray = cur.x.ray(dir)?;
    let mut tried: Vec<(f64, State)> = Vec::new();
    let mut hard: Option<GmmError> = None;
    let res = wolfe_linesearch(
        |a| {
            if hard.is_some() {
                return (f64::NAN, f64::NAN);
            }
            match ray.point(a).and_then(|x| evaluate(obj, x)) {
                Ok(st) => {
                    let dphi = st.x.metric(&st.grad, &ray.velocity(a)).unwrap_or(f64::NAN);
                    let phi = -st.value;
                    tried.push((a, st));
                    (phi, dphi)
                }
                Err(e) if is_numerical(&e) => (f64::INFINITY, f64::NAN),
                Err(e) => {
                    hard = Some(e);
                    (f64::NAN, f64::NAN)
                }
            }
        },
        -cur.value,
        dphi0,
        alpha1,
        cfg,
    );
    if let Some(e) = hard {
        return Err(e);
    }
    Ok(match res {
        Ok(ls) => {
            let idx = tried
                .iter()
                .rposition(|(a, _)| a.to_bits() == ls.alpha.to_bits())
                .expect("accepted step was evaluated");
            let state = tried.swap_remove(idx).1;
            Ok(Accepted { state, ray, ls })
        }
        Err(f) => Err(f),
    })
}
