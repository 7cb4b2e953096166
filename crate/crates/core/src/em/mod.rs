//! Expectation–maximization baseline with k-means++ initialization.

mod kmeanspp;

pub use kmeanspp::{kmeanspp_init, kmeanspp_seed, LLOYD_ITERS};

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GmmError, Result};
use crate::objective::{estep, Dataset, GmmParams};
use crate::optim::{FitReport, Termination};
use crate::spd::{symmetrize, SpdPoint};

/// Components whose effective count falls below this fraction of `n` are
/// reported as collapsed.
pub const COLLAPSE_FRACTION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub max_iters: usize,
    pub tol_avg_ll: f64,
    /// Diagonal covariance floor as a multiple of the data's variance scale.
    pub cov_floor_scale: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 1500,
            tol_avg_ll: 1e-6,
            cov_floor_scale: 1e-6,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_avg_ll > 0.0) || !(self.cov_floor_scale >= 0.0) {
            return Err(GmmError::InvalidArgument(format!("invalid EM config {self:?}")));
        }
        Ok(())
    }

    /// Absolute covariance floor for `data`.
    pub fn cov_floor(&self, data: &Dataset) -> f64 {
        self.cov_floor_scale * data.variance_scale()
    }
}

/// One M-step from E-step statistics about the current means.
fn mstep(g: &GmmParams, stats: &[crate::objective::ComponentStats], n: f64, floor: f64) -> Result<GmmParams> {
    let d = g.d();
    let mut weights = Vec::with_capacity(g.k());
    let mut means = Vec::with_capacity(g.k());
    let mut covs = Vec::with_capacity(g.k());
    for (j, st) in stats.iter().enumerate() {
        if !(st.count >= COLLAPSE_FRACTION * n) {
            return Err(GmmError::DegenerateComponent {
                component: j,
                count: st.count,
            });
        }
        let delta = &st.first / st.count;
        let mut cov = &st.scatter / st.count;
        cov.ger(-1.0, &delta, &delta, 1.0);
        cov += DMatrix::identity(d, d) * floor;
        weights.push(st.count / n);
        means.push(&g.means()[j] + &delta);
        covs.push(SpdPoint::new_symmetrized(symmetrize(&cov))?);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    GmmParams::new(weights, means, covs)
}

pub fn em_fit(data: &Dataset, init: GmmParams, cfg: &EmConfig) -> Result<FitReport<GmmParams>> {
    cfg.validate()?;
    if init.d() != data.d() {
        return Err(GmmError::DimensionMismatch {
            expected: data.d(),
            got: init.d(),
        });
    }
    let start = Instant::now();
    let n = data.n() as f64;
    let floor = cfg.cov_floor(data);
    let mut g = init;
    let (ll, mut stats) = estep(data, &g)?;
    let mut trace = vec![ll / n];
    let mut iterations = 0;
    let termination = loop {
        if iterations >= cfg.max_iters {
            break Termination::MaxIters;
        }
        g = mstep(&g, &stats, n, floor)?;
        let (ll, next) = estep(data, &g)?;
        stats = next;
        iterations += 1;
        let prev = *trace.last().expect("non-empty");
        trace.push(ll / n);
        if (ll / n - prev).abs() < cfg.tol_avg_ll {
            break Termination::Tolerance;
        }
    };
    Ok(FitReport {
        final_point: g,
        avg_ll_trace: trace,
        iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
        termination,
    })
}
