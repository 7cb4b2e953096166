//! Riemannian nonlinear conjugate gradients (Polak–Ribière⁺ with
//! transported gradients, restarting on non-descent directions).

use std::time::Instant;

use super::linesearch::initial_step;
use super::{evaluate, line_step, FitReport, Objective, Observer, OptimConfig, StepEvent, Termination};
use crate::error::Result;
use crate::product::ProductPoint;

pub fn cg_fit<O: Objective + ?Sized>(
    obj: &O,
    x0: ProductPoint,
    cfg: &OptimConfig,
) -> Result<FitReport<ProductPoint>> {
    cg_fit_observed(obj, x0, cfg, &mut |_: &StepEvent<'_>| {})
}

pub fn cg_fit_observed<O: Objective + ?Sized>(
    obj: &O,
    x0: ProductPoint,
    cfg: &OptimConfig,
    observer: &mut dyn Observer,
) -> Result<FitReport<ProductPoint>> {
    cfg.validate()?;
    let start = Instant::now();
    let mut cur = evaluate(obj, x0)?;
    let mut trace = vec![cur.value];
    let mut dir = cur.grad.scaled(-1.0);
    let mut f_prev = None;
    let mut iterations = 0;

    let termination = loop {
        if iterations >= cfg.max_iters {
            break Termination::MaxIters;
        }
        let gg = cur.x.metric(&cur.grad, &cur.grad)?;
        if gg.sqrt() <= cfg.grad_tol {
            break Termination::Tolerance;
        }
        let mut dphi0 = cur.x.metric(&cur.grad, &dir)?;
        let restarted = !(dphi0 < 0.0) || !dir.is_finite();
        if restarted {
            dir = cur.grad.scaled(-1.0);
            dphi0 = -gg;
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
        let moved_dir = acc.ray.velocity(acc.ls.alpha);
        let moved_grad = step.apply(&cur.grad);
        let next = acc.state;
        let num = next.x.metric(&next.grad, &next.grad.sub(&moved_grad))?;
        let beta = (num / gg).max(0.0);
        dir = next.grad.scaled(-1.0);
        dir.axpy(beta, &moved_dir);

        f_prev = Some(-cur.value);
        let old = cur.value;
        cur = next;
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
