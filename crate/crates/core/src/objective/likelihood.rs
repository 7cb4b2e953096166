//! Mixture log-likelihoods and their Euclidean gradients.
//!
//! Both parametrizations share one evaluation kernel: each component is a
//! Gaussian log-density `log_norm − ½‖L⁻¹(x − c)‖²` plus its log-weight,
//! combined per sample by log-sum-exp. Responsibilities are formed in log
//! space and the weighted moments needed by gradients and by the EM M-step
//! are accumulated chunk by chunk (see [`crate::exec`]).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::dataset::Dataset;
use super::params::{eta_to_log_alpha, GmmParams};
use crate::error::{check_dim, GmmError, Result};
use crate::exec;
use crate::product::{EuclideanGrad, ProductPoint};
use crate::spd::{symmetrize, SpdPoint};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `log q(y; S) − log p(x; μ, Σ)` when `S` embeds `(μ, Σ)` with unit scale.
/// The `2π e^{½}` normalization of `q` exceeds the one that makes the two
/// densities coincide by a factor `√(2π)`.
pub const AUGMENTED_LOG_OFFSET: f64 = 0.5 * LN_2PI;

/// `log q(y; S)` where `q = 2π e^{½} p` and `p` is the zero-mean Gaussian
/// density of dimension `dim(S)`.
pub fn log_q_density(y: &DVector<f64>, s: &SpdPoint) -> Result<f64> {
    check_dim(s.dim(), y.len())?;
    let z = s
        .chol_l()
        .solve_lower_triangular(y)
        .ok_or_else(|| GmmError::NumericalBreakdown("triangular solve failed".into()))?;
    Ok(reparam_log_norm(s) - 0.5 * z.norm_squared())
}

/// `log p(x; μ, Σ)`.
pub fn log_gauss_density(x: &DVector<f64>, mu: &DVector<f64>, sigma: &SpdPoint) -> Result<f64> {
    check_dim(sigma.dim(), x.len())?;
    check_dim(sigma.dim(), mu.len())?;
    let z = sigma
        .chol_l()
        .solve_lower_triangular(&(x - mu))
        .ok_or_else(|| GmmError::NumericalBreakdown("triangular solve failed".into()))?;
    Ok(gauss_log_norm(sigma) - 0.5 * z.norm_squared())
}

fn reparam_log_norm(s: &SpdPoint) -> f64 {
    (2.0 * PI).ln() + 0.5 - 0.5 * s.dim() as f64 * LN_2PI - 0.5 * s.log_det()
}

fn gauss_log_norm(sigma: &SpdPoint) -> f64 {
    -0.5 * sigma.dim() as f64 * LN_2PI - 0.5 * sigma.log_det()
}

/// One mixture component as seen by the evaluation loop.
pub(crate) struct Kernel {
    center: Option<DVector<f64>>,
    l_inv: DMatrix<f64>,
    log_norm: f64,
    log_weight: f64,
}

impl Kernel {
    fn new(center: Option<DVector<f64>>, cov: &SpdPoint, log_norm: f64, log_weight: f64) -> Result<Self> {
        let p = cov.dim();
        let l_inv = cov
            .chol_l()
            .solve_lower_triangular(&DMatrix::identity(p, p))
            .ok_or_else(|| GmmError::NumericalBreakdown("triangular inverse failed".into()))?;
        Ok(Self {
            center,
            l_inv,
            log_norm,
            log_weight,
        })
    }

    fn precision(&self) -> DMatrix<f64> {
        symmetrize(&(self.l_inv.transpose() * &self.l_inv))
    }
}

/// Weighted moments of one component about its kernel center `c`:
/// `count = Σ wᵢ`, `first = Σ wᵢ (xᵢ − c)`, `scatter = Σ wᵢ (xᵢ − c)(xᵢ − c)ᵀ`.
#[derive(Debug, Clone)]
pub(crate) struct ComponentStats {
    pub count: f64,
    pub first: DVector<f64>,
    pub scatter: DMatrix<f64>,
}

impl ComponentStats {
    fn zeros(p: usize) -> Self {
        Self {
            count: 0.0,
            first: DVector::zeros(p),
            scatter: DMatrix::zeros(p, p),
        }
    }

    fn add_assign(&mut self, o: &Self) {
        self.count += o.count;
        self.first += &o.first;
        self.scatter += &o.scatter;
    }
}

struct ChunkOut {
    loglik: f64,
    stats: Vec<ComponentStats>,
    resp: Option<DMatrix<f64>>,
}

#[derive(Clone, Copy, PartialEq)]
enum Want {
    Value,
    Stats,
    Responsibilities,
}

fn eval_chunk(
    data: &DMatrix<f64>,
    range: std::ops::Range<usize>,
    kernels: &[Kernel],
    want: Want,
) -> Result<ChunkOut> {
    let m = range.len();
    let k = kernels.len();
    let view = data.columns(range.start, m);
    let mut logd = DMatrix::zeros(k, m);
    let mut centered = Vec::with_capacity(if want == Want::Stats { k } else { 0 });
    for (j, ker) in kernels.iter().enumerate() {
        let xc = match &ker.center {
            Some(c) => {
                let mut xc = view.clone_owned();
                for mut col in xc.column_iter_mut() {
                    col -= c;
                }
                xc
            }
            None => view.clone_owned(),
        };
        let z = &ker.l_inv * &xc;
        let base = ker.log_norm + ker.log_weight;
        for (i, col) in z.column_iter().enumerate() {
            logd[(j, i)] = base - 0.5 * col.norm_squared();
        }
        if want == Want::Stats {
            centered.push(xc);
        }
    }

    let mut loglik = 0.0;
    for i in 0..m {
        let col = logd.column(i);
        let max = col.max();
        let sum: f64 = col.iter().map(|v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        if !lse.is_finite() {
            return Err(GmmError::NonFiniteSample {
                sample: range.start + i,
            });
        }
        loglik += lse;
        if want != Want::Value {
            for j in 0..k {
                logd[(j, i)] = (logd[(j, i)] - lse).exp();
            }
        }
    }

    let mut stats = Vec::new();
    if want == Want::Stats {
        for (j, xc) in centered.into_iter().enumerate() {
            let w = logd.row(j);
            let mut xw = xc.clone();
            for (mut col, &wi) in xw.column_iter_mut().zip(w.iter()) {
                col *= wi;
            }
            stats.push(ComponentStats {
                count: w.sum(),
                first: xw.column_sum(),
                scatter: &xw * xc.transpose(),
            });
        }
    }
    let resp = (want == Want::Responsibilities).then(|| logd.transpose());
    Ok(ChunkOut {
        loglik,
        stats,
        resp,
    })
}

fn evaluate(data: &DMatrix<f64>, kernels: &[Kernel], want: Want) -> Result<(f64, Vec<ComponentStats>, Option<DMatrix<f64>>)> {
    let n = data.ncols();
    let p = data.nrows();
    let chunks = exec::map_chunks(n, |r| eval_chunk(data, r, kernels, want));
    let mut loglik = 0.0;
    let mut stats = if want == Want::Stats {
        vec![ComponentStats::zeros(p); kernels.len()]
    } else {
        Vec::new()
    };
    let mut resp = (want == Want::Responsibilities).then(|| DMatrix::zeros(n, kernels.len()));
    let mut offset = 0;
    for c in chunks {
        let c = c?;
        loglik += c.loglik;
        for (acc, s) in stats.iter_mut().zip(&c.stats) {
            acc.add_assign(s);
        }
        if let (Some(all), Some(part)) = (resp.as_mut(), c.resp) {
            all.rows_mut(offset, part.nrows()).copy_from(&part);
            offset += part.nrows();
        }
    }
    Ok((loglik, stats, resp))
}

fn reparam_kernels(data: &Dataset, p: &ProductPoint) -> Result<Vec<Kernel>> {
    let k = p.blocks.len();
    if k == 0 {
        return Err(GmmError::InvalidArgument("no mixture components".into()));
    }
    check_dim(data.d() + 1, p.block_dim())?;
    check_dim(k - 1, p.euclid.len())?;
    let log_alpha = eta_to_log_alpha(&p.euclid);
    p.blocks
        .iter()
        .zip(log_alpha)
        .map(|(s, la)| Kernel::new(None, s, reparam_log_norm(s), la))
        .collect()
}

fn original_kernels(means: &[DVector<f64>], covs: &[SpdPoint], log_alpha: &[f64]) -> Result<Vec<Kernel>> {
    means
        .iter()
        .zip(covs)
        .zip(log_alpha)
        .map(|((m, c), &la)| Kernel::new(Some(m.clone()), c, gauss_log_norm(c), la))
        .collect()
}

fn params_kernels(data: &Dataset, g: &GmmParams) -> Result<Vec<Kernel>> {
    check_dim(data.d(), g.d())?;
    let log_alpha: Vec<f64> = g.weights().iter().map(|a| a.ln()).collect();
    original_kernels(g.means(), g.covs(), &log_alpha)
}

/// `Σᵢ log Σⱼ αⱼ q(yᵢ; Sⱼ)` with `α = softmax([η; 0])`.
pub fn reparam_loglik(data: &Dataset, p: &ProductPoint) -> Result<f64> {
    let kernels = reparam_kernels(data, p)?;
    Ok(evaluate(data.augmented_columns(), &kernels, Want::Value)?.0)
}

/// Euclidean gradient of [`reparam_loglik`].
pub fn reparam_egrad(data: &Dataset, p: &ProductPoint) -> Result<EuclideanGrad> {
    Ok(reparam_loglik_and_egrad(data, p)?.1)
}

/// Value and Euclidean gradient of the reparametrized log-likelihood:
/// `∂/∂Sⱼ = ½ Σᵢ wᵢⱼ (Sⱼ⁻¹ yᵢ yᵢᵀ Sⱼ⁻¹ − Sⱼ⁻¹)` and
/// `∂/∂ηⱼ = Σᵢ (wᵢⱼ − αⱼ)`.
pub fn reparam_loglik_and_egrad(data: &Dataset, p: &ProductPoint) -> Result<(f64, EuclideanGrad)> {
    let kernels = reparam_kernels(data, p)?;
    let (ll, stats, _) = evaluate(data.augmented_columns(), &kernels, Want::Stats)?;
    let n = data.n() as f64;
    let blocks = kernels
        .iter()
        .zip(&stats)
        .map(|(ker, st)| {
            let prec = ker.precision();
            symmetrize(&((&prec * &st.scatter * &prec - &prec * st.count) * 0.5))
        })
        .collect();
    let k = kernels.len();
    let euclid = DVector::from_fn(k - 1, |j, _| stats[j].count - n * kernels[j].log_weight.exp());
    Ok((ll, EuclideanGrad { blocks, euclid }))
}

/// `Σᵢ log Σⱼ αⱼ p(xᵢ; μⱼ, Σⱼ)`.
pub fn original_loglik(data: &Dataset, g: &GmmParams) -> Result<f64> {
    let kernels = params_kernels(data, g)?;
    Ok(evaluate(data.columns(), &kernels, Want::Value)?.0)
}

/// Value and Euclidean gradient of the original log-likelihood at a point
/// laid out as in [`GmmParams::to_usual`] (covariance blocks; Euclidean part
/// `[μ₁; …; μ_K; η]`).
pub fn usual_loglik_and_egrad(data: &Dataset, p: &ProductPoint) -> Result<(f64, EuclideanGrad)> {
    let k = p.blocks.len();
    let d = data.d();
    if k == 0 {
        return Err(GmmError::InvalidArgument("no mixture components".into()));
    }
    check_dim(d, p.block_dim())?;
    check_dim(k * d + k - 1, p.euclid.len())?;
    let means: Vec<DVector<f64>> = (0..k).map(|j| p.euclid.rows(j * d, d).into_owned()).collect();
    let log_alpha = eta_to_log_alpha(&p.euclid.rows(k * d, k - 1).into_owned());
    let kernels = original_kernels(&means, &p.blocks, &log_alpha)?;
    let (ll, stats, _) = evaluate(data.columns(), &kernels, Want::Stats)?;
    let n = data.n() as f64;
    let mut euclid = DVector::zeros(k * d + k - 1);
    let mut blocks = Vec::with_capacity(k);
    for (j, (ker, st)) in kernels.iter().zip(&stats).enumerate() {
        let prec = ker.precision();
        euclid.rows_mut(j * d, d).copy_from(&(&prec * &st.first));
        blocks.push(symmetrize(&((&prec * &st.scatter * &prec - &prec * st.count) * 0.5)));
        if j + 1 < k {
            euclid[k * d + j] = st.count - n * log_alpha[j].exp();
        }
    }
    Ok((ll, EuclideanGrad { blocks, euclid }))
}

/// Posterior membership probabilities `wᵢⱼ` (`n × K`) under `(α, μ, Σ)`.
pub fn responsibilities(data: &Dataset, g: &GmmParams) -> Result<DMatrix<f64>> {
    let kernels = params_kernels(data, g)?;
    Ok(evaluate(data.columns(), &kernels, Want::Responsibilities)?
        .2
        .expect("requested"))
}

/// Responsibilities under the reparametrized model.
pub fn reparam_responsibilities(data: &Dataset, p: &ProductPoint) -> Result<DMatrix<f64>> {
    let kernels = reparam_kernels(data, p)?;
    Ok(evaluate(data.augmented_columns(), &kernels, Want::Responsibilities)?
        .2
        .expect("requested"))
}

/// E-step: total log-likelihood and per-component moments about the
/// current means.
pub(crate) fn estep(data: &Dataset, g: &GmmParams) -> Result<(f64, Vec<ComponentStats>)> {
    let kernels = params_kernels(data, g)?;
    let (ll, stats, _) = evaluate(data.columns(), &kernels, Want::Stats)?;
    Ok((ll, stats))
}
