//! GMM log-likelihood in the original and the augmented (reparametrized)
//! forms.

mod dataset;
mod likelihood;
mod params;

pub use dataset::Dataset;
pub(crate) use likelihood::{estep, ComponentStats};
pub use likelihood::{
    log_gauss_density, log_q_density, original_loglik, AUGMENTED_LOG_OFFSET, reparam_egrad, reparam_loglik,
    reparam_loglik_and_egrad, reparam_responsibilities, responsibilities, usual_loglik_and_egrad,
};
pub use params::{
    alpha_to_eta, eta_to_alpha, eta_to_log_alpha, musigma_to_s, s_to_musigma, GmmParams,
    ModelFile,
};

use crate::error::Result;
use crate::optim::Objective;
use crate::product::{EuclideanGrad, ProductPoint};

/// Average log-likelihood of the augmented model over
/// `(∏ SPD(d+1)) × ℝ^{K−1}`. With one block this is the single-Gaussian
/// augmented objective.
pub struct ReparamObjective<'a> {
    data: &'a Dataset,
}

impl<'a> ReparamObjective<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        Self { data }
    }
}

impl Objective for ReparamObjective<'_> {
    fn value_and_egrad(&self, x: &ProductPoint) -> Result<(f64, EuclideanGrad)> {
        let (ll, mut g) = reparam_loglik_and_egrad(self.data, x)?;
        let inv_n = 1.0 / self.data.n() as f64;
        scale_grad(&mut g, inv_n);
        Ok((ll * inv_n, g))
    }
}

/// Average log-likelihood in the original `(μ, Σ, η)` coordinates over
/// `(ℝᵈ × SPD(d))ᴷ × ℝ^{K−1}`, with the means treated as flat coordinates.
pub struct UsualObjective<'a> {
    data: &'a Dataset,
}

impl<'a> UsualObjective<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        Self { data }
    }
}

impl Objective for UsualObjective<'_> {
    fn value_and_egrad(&self, x: &ProductPoint) -> Result<(f64, EuclideanGrad)> {
        let (ll, mut g) = usual_loglik_and_egrad(self.data, x)?;
        let inv_n = 1.0 / self.data.n() as f64;
        scale_grad(&mut g, inv_n);
        Ok((ll * inv_n, g))
    }
}

fn scale_grad(g: &mut EuclideanGrad, s: f64) {
    for b in &mut g.blocks {
        *b *= s;
    }
    g.euclid *= s;
}
