use serde::{Deserialize, Serialize};

use crate::error::{GmmError, Result};

/// Optimizer and line-search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_iters: usize,
    /// Stop when consecutive average log-likelihoods differ by less than this.
    pub tol_avg_ll: f64,
    /// Stop when the Riemannian gradient norm falls to this value.
    pub grad_tol: f64,
    /// L-RBFGS history length.
    pub memory: usize,
    /// Iteration cap for each line-search phase.
    pub ls_max_iters: usize,
    /// Interpolated trial steps stay this fraction of the bracket away from its ends.
    pub interp_margin: f64,
    /// Extrapolated steps lie in `[extrap_lo·α, extrap_hi·α]`.
    pub extrap_lo: f64,
    pub extrap_hi: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            max_iters: 1500,
            tol_avg_ll: 1e-6,
            grad_tol: 1e-10,
            memory: 10,
            ls_max_iters: 30,
            interp_margin: 0.1,
            extrap_lo: 1.1,
            extrap_hi: 10.0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GmmError::InvalidArgument(m.to_string()));
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return bad("need 0 < c1 < c2 < 1");
        }
        if !(self.interp_margin > 0.0 && self.interp_margin < 0.5) {
            return bad("interp_margin must lie in (0, 1/2)");
        }
        if !(1.0 < self.extrap_lo && self.extrap_lo < self.extrap_hi) {
            return bad("need 1 < extrap_lo < extrap_hi");
        }
        if !(self.tol_avg_ll > 0.0) || self.grad_tol < 0.0 {
            return bad("tolerances must be positive");
        }
        if self.memory == 0 || self.ls_max_iters == 0 {
            return bad("memory and ls_max_iters must be positive");
        }
        Ok(())
    }
}
