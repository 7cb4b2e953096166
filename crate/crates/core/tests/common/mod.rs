#![allow(dead_code)]

use geodesic_gmm::objective::Dataset;
use geodesic_gmm::optim::{Objective, StepEvent};
use geodesic_gmm::product::{ProductPoint, ProductTangent};
use geodesic_gmm::testing::{gaussian_matrix, gaussian_vector, random_spd, rng};
use nalgebra::{DMatrix, DVector};

/// `n` draws from one Gaussian with random mean and covariance.
pub fn gaussian_data(seed: u64, n: usize, d: usize) -> Dataset {
    let mut r = rng(seed);
    let mu = gaussian_vector(&mut r, d) * 2.0;
    let cov = random_spd(&mut r, d);
    let mut cols = cov.chol_l() * gaussian_matrix(&mut r, d, n);
    for mut c in cols.column_iter_mut() {
        c += &mu;
    }
    Dataset::from_columns(cols).unwrap()
}

/// Closed-form optimum of the single-component augmented problem.
pub fn augmented_scatter(data: &Dataset) -> DMatrix<f64> {
    let y = data.augmented_columns();
    (y * y.transpose()) / data.n() as f64
}

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn rel_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Independent recheck of the strong Wolfe conditions for an accepted step:
/// the trial point is rebuilt with `expmap` and the direction carried with
/// the general two-point transport rather than the cached ray.
pub struct WolfeCheck {
    pub sufficient: bool,
    pub curvature: bool,
    pub descent: bool,
}

pub fn recheck_wolfe<O: Objective>(obj: &O, ev: &StepEvent<'_>, c1: f64, c2: f64) -> WolfeCheck {
    let x1 = ev.point.expmap(&ev.direction.scaled(ev.alpha)).unwrap();
    let (v, eg) = obj.value_and_egrad(&x1).unwrap();
    let mut neg = eg;
    for b in &mut neg.blocks {
        b.neg_mut();
    }
    neg.euclid.neg_mut();
    let grad = x1.egrad_to_rgrad(&neg).unwrap();
    let moved: ProductTangent = ev.point.transport(&x1, ev.direction).unwrap();
    let phi = -v;
    let dphi = x1.metric(&grad, &moved).unwrap();
    // recomputation differs from the optimizer's own evaluation only by round-off
    let slack = 1e-12 * (1.0 + ev.phi0.abs());
    WolfeCheck {
        sufficient: phi <= ev.phi0 + c1 * ev.alpha * ev.dphi0 + slack,
        curvature: dphi.abs() <= c2 * ev.dphi0.abs() + 1e-9 * ev.dphi0.abs().max(1e-12),
        descent: ev.dphi0 < 0.0,
    }
}

pub fn single_block(dim: usize) -> ProductPoint {
    ProductPoint::new(vec![geodesic_gmm::spd::SpdPoint::identity(dim)], DVector::zeros(0)).unwrap()
}
