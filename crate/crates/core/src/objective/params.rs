use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, GmmError, Result};
use crate::product::ProductPoint;
use crate::spd::SpdPoint;

/// Tolerance on `Σ αⱼ = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Mixture parameters in the original `(α, μ, Σ)` form.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covs: Vec<SpdPoint>,
}

impl GmmParams {
    pub fn new(weights: Vec<f64>, means: Vec<DVector<f64>>, covs: Vec<SpdPoint>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(GmmError::InvalidArgument("mixture needs at least one component".into()));
        }
        check_dim(k, means.len())?;
        check_dim(k, covs.len())?;
        let d = means[0].len();
        for (m, c) in means.iter().zip(&covs) {
            check_dim(d, m.len())?;
            check_dim(d, c.dim())?;
            if m.iter().any(|v| !v.is_finite()) {
                return Err(GmmError::InvalidArgument("non-finite mean".into()));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(GmmError::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(GmmError::InvalidArgument(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self {
            weights,
            means,
            covs,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn d(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covs(&self) -> &[SpdPoint] {
        &self.covs
    }

    /// Lifts to the reparametrized product point: blocks `musigma_to_s(μⱼ, Σⱼ)`
    /// and logits `alpha_to_eta(α)`.
    pub fn to_reparam(&self) -> Result<ProductPoint> {
        let blocks = self
            .means
            .iter()
            .zip(&self.covs)
            .map(|(m, c)| musigma_to_s(m, c))
            .collect::<Result<Vec<_>>>()?;
        ProductPoint::new(blocks, alpha_to_eta(&self.weights)?)
    }

    /// Recovers `(α, μ, Σ)` from a reparametrized point, discarding each
    /// block's scale `s`.
    pub fn from_reparam(p: &ProductPoint) -> Result<Self> {
        let mut means = Vec::with_capacity(p.blocks.len());
        let mut covs = Vec::with_capacity(p.blocks.len());
        for b in &p.blocks {
            let (m, c, _) = s_to_musigma(b)?;
            means.push(m);
            covs.push(c);
        }
        Self::new(eta_to_alpha(&p.euclid), means, covs)
    }

    /// Point for the unreparametrized problem: blocks `Σⱼ`, Euclidean part
    /// `[μ₁; …; μ_K; η]`.
    pub fn to_usual(&self) -> Result<ProductPoint> {
        let d = self.d();
        let k = self.k();
        let mut euclid = DVector::zeros(k * d + k - 1);
        for (j, m) in self.means.iter().enumerate() {
            euclid.rows_mut(j * d, d).copy_from(m);
        }
        euclid.rows_mut(k * d, k - 1).copy_from(&alpha_to_eta(&self.weights)?);
        ProductPoint::new(self.covs.clone(), euclid)
    }

    pub fn from_usual(p: &ProductPoint) -> Result<Self> {
        let k = p.blocks.len();
        let d = p.block_dim();
        check_dim(k * d + k - 1, p.euclid.len())?;
        let means = (0..k).map(|j| p.euclid.rows(j * d, d).into_owned()).collect();
        let eta = p.euclid.rows(k * d, k - 1).into_owned();
        Self::new(eta_to_alpha(&eta), means, p.blocks.clone())
    }

    pub fn to_model_file(&self) -> ModelFile {
        ModelFile {
            k: self.k(),
            d: self.d(),
            weights: self.weights.clone(),
            means: self.means.iter().map(|m| m.iter().copied().collect()).collect(),
            covariances: self
                .covs
                .iter()
                .map(|c| {
                    let m = c.matrix();
                    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
                })
                .collect(),
        }
    }

    pub fn from_model_file(f: &ModelFile) -> Result<Self> {
        check_dim(f.k, f.weights.len())?;
        check_dim(f.k, f.means.len())?;
        check_dim(f.k, f.covariances.len())?;
        let means = f
            .means
            .iter()
            .map(|m| {
                check_dim(f.d, m.len())?;
                Ok(DVector::from_column_slice(m))
            })
            .collect::<Result<Vec<_>>>()?;
        let covs = f
            .covariances
            .iter()
            .map(|c| {
                check_dim(f.d, c.len())?;
                for row in c {
                    check_dim(f.d, row.len())?;
                }
                SpdPoint::new(DMatrix::from_fn(f.d, f.d, |r, col| c[r][col]))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(f.weights.clone(), means, covs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_model_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_model_file(&serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// `K × d × d`, row-major.
    pub covariances: Vec<Vec<Vec<f64>>>,
}

/// Splits an augmented block `[[A, t], [tᵀ, s]]` into the conditional mean
/// `μ = t / s`, the Schur complement `Σ = A − t tᵀ / s`, and `s`.
pub fn s_to_musigma(s_mat: &SpdPoint) -> Result<(DVector<f64>, SpdPoint, f64)> {
    let p = s_mat.dim();
    if p < 2 {
        return Err(GmmError::InvalidArgument("augmented block must have dim >= 2".into()));
    }
    let d = p - 1;
    let m = s_mat.matrix();
    let s = m[(d, d)];
    let t = m.view((0, d), (d, 1)).into_owned();
    let a = m.view((0, 0), (d, d)).into_owned();
    let sigma = a - &t * t.transpose() / s;
    Ok((t.column(0) / s, SpdPoint::new_symmetrized(sigma)?, s))
}

/// `[[Σ + μμᵀ, μ], [μᵀ, 1]]`.
pub fn musigma_to_s(mu: &DVector<f64>, sigma: &SpdPoint) -> Result<SpdPoint> {
    check_dim(sigma.dim(), mu.len())?;
    let d = mu.len();
    let mut m = DMatrix::zeros(d + 1, d + 1);
    m.view_mut((0, 0), (d, d)).copy_from(&(sigma.matrix() + mu * mu.transpose()));
    m.view_mut((0, d), (d, 1)).copy_from(mu);
    m.view_mut((d, 0), (1, d)).copy_from(&mu.transpose());
    m[(d, d)] = 1.0;
    SpdPoint::new_symmetrized(m)
}

/// Softmax with the K-th logit pinned to zero.
pub fn eta_to_alpha(eta: &DVector<f64>) -> Vec<f64> {
    let max = eta.iter().copied().fold(0.0_f64, f64::max);
    let mut a: Vec<f64> = eta.iter().map(|e| (e - max).exp()).collect();
    a.push((-max).exp());
    let z: f64 = a.iter().sum();
    a.iter_mut().for_each(|v| *v /= z);
    a
}

/// `log α` for the softmax of `[η; 0]`, computed without forming `α`.
pub fn eta_to_log_alpha(eta: &DVector<f64>) -> Vec<f64> {
    let max = eta.iter().copied().fold(0.0_f64, f64::max);
    let z = eta.iter().map(|e| (e - max).exp()).sum::<f64>() + (-max).exp();
    let lz = max + z.ln();
    eta.iter().map(|e| e - lz).chain(std::iter::once(-lz)).collect()
}

/// `ηⱼ = log(αⱼ / α_K)` for `j < K`.
pub fn alpha_to_eta(alpha: &[f64]) -> Result<DVector<f64>> {
    if alpha.is_empty() {
        return Err(GmmError::InvalidArgument("empty weight vector".into()));
    }
    if let Some(j) = alpha.iter().position(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(GmmError::InvalidArgument(format!(
            "weight {j} is {}, logits need strictly positive weights",
            alpha[j]
        )));
    }
    let last = alpha[alpha.len() - 1];
    Ok(DVector::from_iterator(
        alpha.len() - 1,
        alpha[..alpha.len() - 1].iter().map(|a| (a / last).ln()),
    ))
}
