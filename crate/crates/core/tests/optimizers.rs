mod common;

use common::*;
use geodesic_gmm::datagen::{generate, GenSpec};
use geodesic_gmm::fit::{initialize, FitSettings};
use geodesic_gmm::objective::{s_to_musigma, ReparamObjective, UsualObjective};
use geodesic_gmm::optim::{cg_fit, cg_fit_observed, lbfgs_fit, lbfgs_fit_observed, OptimConfig, StepEvent, Termination};
use geodesic_gmm::product::ProductPoint;
use geodesic_gmm::spd::SpdPoint;
use nalgebra::DVector;

#[test]
fn lbfgs_single_gaussian_reaches_closed_form() {
    for (seed, d) in [(1, 2), (2, 3), (3, 5)] {
        let data = gaussian_data(seed, 100 * d * d, d);
        let obj = ReparamObjective::new(&data);
        // the 1e-6 ALL stopping rule leaves ~1e-5 parameter error; run to convergence
        let cfg = OptimConfig {
            tol_avg_ll: 1e-10,
            ..Default::default()
        };
        let rep = lbfgs_fit(&obj, single_block(d + 1), &cfg).unwrap();
        let err = rel_frobenius(rep.final_point.blocks[0].matrix(), &augmented_scatter(&data));
        assert_eq!(rep.termination, Termination::Tolerance);
        assert!(err < 1e-6, "d={d}: relative error {err:e}");
    }
}

#[test]
fn stationary_start_stops_quickly() {
    let data = gaussian_data(4, 400, 2);
    let opt = ProductPoint::new(
        vec![SpdPoint::new_symmetrized(augmented_scatter(&data)).unwrap()],
        DVector::zeros(0),
    )
    .unwrap();
    let obj = ReparamObjective::new(&data);
    let rep = lbfgs_fit(&obj, opt.clone(), &OptimConfig::default()).unwrap();
    assert!(rep.iterations <= 2);
    assert_eq!(rep.termination, Termination::Tolerance);
    let rep = cg_fit(&obj, opt, &OptimConfig::default()).unwrap();
    assert!(rep.iterations <= 2);
}

#[test]
fn cg_and_lbfgs_agree_on_single_gaussian() {
    let data = gaussian_data(5, 900, 3);
    let obj = ReparamObjective::new(&data);
    let cfg = OptimConfig {
        tol_avg_ll: 1e-10,
        ..Default::default()
    };
    let a = lbfgs_fit(&obj, single_block(4), &cfg).unwrap();
    let b = cg_fit(&obj, single_block(4), &cfg).unwrap();
    let err = rel_frobenius(b.final_point.blocks[0].matrix(), a.final_point.blocks[0].matrix());
    assert!(err < 1e-5, "{err:e}");
    // unit scale and the sample moments
    let (mu, sigma, s) = s_to_musigma(&a.final_point.blocks[0]).unwrap();
    assert!((s - 1.0).abs() < 1e-5);
    assert!(rel_vec(&mu, &data.mean()) < 1e-5);
    assert!(rel_frobenius(sigma.matrix(), &data.covariance()) < 1e-5);
}

#[test]
fn cg_first_step_is_steepest_descent() {
    let data = gaussian_data(6, 400, 2);
    let obj = ReparamObjective::new(&data);
    let mut first: Option<(f64, f64)> = None;
    let cfg = OptimConfig::default();
    cg_fit_observed(&obj, single_block(3), &cfg, &mut |ev: &StepEvent<'_>| {
        if ev.iteration == 0 {
            let norm2 = ev.point.metric(ev.direction, ev.direction).unwrap();
            first = Some((ev.dphi0, norm2));
        }
    })
    .unwrap();
    let (dphi0, norm2) = first.unwrap();
    // direction = −grad ⇒ ⟨grad, dir⟩ = −‖dir‖²
    assert!((dphi0 + norm2).abs() <= 1e-12 * norm2);
}

#[test]
fn mixture_steps_pass_wolfe_audit_and_descend() {
    let (_, data) = generate(&GenSpec::new(3, 3, 0.5, 10.0, 12)).unwrap();
    let init = initialize(&data, 3, &FitSettings::default(), 12).unwrap();
    let cfg = OptimConfig::default();
    let obj = ReparamObjective::new(&data);
    let mut steps = 0;
    let rep = lbfgs_fit_observed(&obj, init.to_reparam().unwrap(), &cfg, &mut |ev: &StepEvent<'_>| {
        let c = recheck_wolfe(&obj, ev, cfg.c1, cfg.c2);
        assert!(c.descent && c.sufficient && c.curvature, "step {}", ev.iteration);
        steps += 1;
    })
    .unwrap();
    assert_eq!(steps, rep.iterations);
    for w in rep.avg_ll_trace.windows(2) {
        assert!(w[1] > w[0]);
    }

    let uobj = UsualObjective::new(&data);
    cg_fit_observed(&uobj, init.to_usual().unwrap(), &cfg, &mut |ev: &StepEvent<'_>| {
        let c = recheck_wolfe(&uobj, ev, cfg.c1, cfg.c2);
        assert!(c.descent && c.sufficient && c.curvature, "usual step {}", ev.iteration);
    })
    .unwrap();
}

#[test]
fn fits_are_bitwise_deterministic() {
    let (_, data) = generate(&GenSpec::new(2, 3, 1.0, 10.0, 2)).unwrap();
    let init = initialize(&data, 3, &FitSettings::default(), 2).unwrap();
    let obj = ReparamObjective::new(&data);
    let a = lbfgs_fit(&obj, init.to_reparam().unwrap(), &OptimConfig::default()).unwrap();
    let b = lbfgs_fit(&obj, init.to_reparam().unwrap(), &OptimConfig::default()).unwrap();
    assert_eq!(a.avg_ll_trace, b.avg_ll_trace);
    assert_eq!(a.final_point, b.final_point);
}

#[test]
fn max_iters_is_reported() {
    let data = gaussian_data(7, 400, 2);
    let cfg = OptimConfig {
        max_iters: 1,
        ..Default::default()
    };
    let rep = lbfgs_fit(&ReparamObjective::new(&data), single_block(3), &cfg).unwrap();
    assert_eq!(rep.termination, Termination::MaxIters);
    assert_eq!(rep.iterations, 1);
    assert_eq!(rep.avg_ll_trace.len(), 2);
}
