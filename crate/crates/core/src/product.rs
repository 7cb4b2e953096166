//! Product manifold of SPD blocks and a flat Euclidean factor.
//!
//! The Euclidean factor holds the mixing logits for the reparametrized
//! problem and the component means followed by the logits for the
//! unreparametrized one. Geometry is the componentwise product: the metric
//! is the sum of block metrics plus the Euclidean dot product.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, GmmError, Result};
use crate::spd::{self, GeodesicRay, SpdPoint, StepTransport, TangentVec};

#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    pub blocks: Vec<SpdPoint>,
    pub euclid: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductTangent {
    pub blocks: Vec<TangentVec>,
    pub euclid: DVector<f64>,
}

/// Euclidean gradient with respect to the ambient coordinates of a
/// [`ProductPoint`].
#[derive(Debug, Clone)]
pub struct EuclideanGrad {
    pub blocks: Vec<DMatrix<f64>>,
    pub euclid: DVector<f64>,
}

impl ProductPoint {
    pub fn new(blocks: Vec<SpdPoint>, euclid: DVector<f64>) -> Result<Self> {
        if let Some(first) = blocks.first() {
            for b in &blocks {
                check_dim(first.dim(), b.dim())?;
            }
        }
        if euclid.iter().any(|v| !v.is_finite()) {
            return Err(GmmError::InvalidArgument("non-finite Euclidean coordinates".into()));
        }
        Ok(Self { blocks, euclid })
    }

    pub fn block_dim(&self) -> usize {
        self.blocks.first().map_or(0, SpdPoint::dim)
    }

    fn check_tangent(&self, xi: &ProductTangent) -> Result<()> {
        check_dim(self.blocks.len(), xi.blocks.len())?;
        check_dim(self.euclid.len(), xi.euclid.len())?;
        for (b, t) in self.blocks.iter().zip(&xi.blocks) {
            check_dim(b.dim(), t.dim())?;
        }
        Ok(())
    }

    pub fn zero_tangent(&self) -> ProductTangent {
        ProductTangent {
            blocks: self.blocks.iter().map(|b| TangentVec::zeros(b.dim())).collect(),
            euclid: DVector::zeros(self.euclid.len()),
        }
    }

    pub fn metric(&self, xi: &ProductTangent, eta: &ProductTangent) -> Result<f64> {
        self.check_tangent(xi)?;
        self.check_tangent(eta)?;
        let mut total = xi.euclid.dot(&eta.euclid);
        for ((b, x), e) in self.blocks.iter().zip(&xi.blocks).zip(&eta.blocks) {
            total += spd::metric(b, x, e)?;
        }
        Ok(total)
    }

    pub fn norm(&self, xi: &ProductTangent) -> Result<f64> {
        Ok(self.metric(xi, xi)?.max(0.0).sqrt())
    }

    pub fn egrad_to_rgrad(&self, g: &EuclideanGrad) -> Result<ProductTangent> {
        check_dim(self.blocks.len(), g.blocks.len())?;
        check_dim(self.euclid.len(), g.euclid.len())?;
        let blocks = self
            .blocks
            .iter()
            .zip(&g.blocks)
            .map(|(b, gb)| spd::egrad_to_rgrad(b, gb))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductTangent {
            blocks,
            euclid: g.euclid.clone(),
        })
    }

    pub fn expmap(&self, xi: &ProductTangent) -> Result<ProductPoint> {
        self.check_tangent(xi)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&xi.blocks)
            .map(|(b, t)| spd::expmap(b, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductPoint {
            blocks,
            euclid: &self.euclid + &xi.euclid,
        })
    }

    /// Transports `xi` from `self` to `to`; the Euclidean part is unchanged.
    pub fn transport(&self, to: &ProductPoint, xi: &ProductTangent) -> Result<ProductTangent> {
        self.check_tangent(xi)?;
        to.check_tangent(xi)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&to.blocks)
            .zip(&xi.blocks)
            .map(|((f, t), x)| spd::transport(f, t, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductTangent {
            blocks,
            euclid: xi.euclid.clone(),
        })
    }

    pub fn ray(&self, xi: &ProductTangent) -> Result<ProductRay> {
        self.check_tangent(xi)?;
        if !xi.is_finite() {
            return Err(GmmError::InvalidArgument("non-finite search direction".into()));
        }
        Ok(ProductRay {
            rays: self
                .blocks
                .iter()
                .zip(&xi.blocks)
                .map(|(b, t)| GeodesicRay::new(b, t))
                .collect(),
            base_euclid: self.euclid.clone(),
            dir_euclid: xi.euclid.clone(),
        })
    }
}

impl ProductTangent {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.scaled(s)).collect(),
            euclid: &self.euclid * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.add(b)).collect(),
            euclid: &self.euclid + &other.euclid,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.sub(b)).collect(),
            euclid: &self.euclid - &other.euclid,
        }
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (s, b) in self.blocks.iter_mut().zip(&x.blocks) {
            s.axpy(a, b);
        }
        self.euclid.axpy(a, &x.euclid, 1.0);
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(TangentVec::is_finite) && self.euclid.iter().all(|v| v.is_finite())
    }
}

/// Componentwise geodesic through a [`ProductPoint`].
#[derive(Debug, Clone)]
pub struct ProductRay {
    rays: Vec<GeodesicRay>,
    base_euclid: DVector<f64>,
    dir_euclid: DVector<f64>,
}

impl ProductRay {
    pub fn point(&self, t: f64) -> Result<ProductPoint> {
        Ok(ProductPoint {
            blocks: self.rays.iter().map(|r| r.point(t)).collect::<Result<Vec<_>>>()?,
            euclid: &self.base_euclid + &self.dir_euclid * t,
        })
    }

    pub fn velocity(&self, t: f64) -> ProductTangent {
        ProductTangent {
            blocks: self.rays.iter().map(|r| r.velocity(t)).collect(),
            euclid: self.dir_euclid.clone(),
        }
    }

    pub fn transport(&self, t: f64) -> ProductTransport {
        ProductTransport {
            blocks: self.rays.iter().map(|r| r.transport(t)).collect(),
        }
    }
}

/// Cached transport between two product points.
#[derive(Debug, Clone)]
pub struct ProductTransport {
    blocks: Vec<StepTransport>,
}

impl ProductTransport {
    pub fn between(from: &ProductPoint, to: &ProductPoint) -> Self {
        Self {
            blocks: from
                .blocks
                .iter()
                .zip(&to.blocks)
                .map(|(f, t)| StepTransport::between(f, t))
                .collect(),
        }
    }

    pub fn identity(block_count: usize, block_dim: usize) -> Self {
        Self {
            blocks: vec![StepTransport::identity(block_dim); block_count],
        }
    }

    pub fn apply(&self, xi: &ProductTangent) -> ProductTangent {
        ProductTangent {
            blocks: self.blocks.iter().zip(&xi.blocks).map(|(t, x)| t.apply(x)).collect(),
            euclid: xi.euclid.clone(),
        }
    }

    pub fn apply_inverse(&self, xi: &ProductTangent) -> ProductTangent {
        ProductTangent {
            blocks: self
                .blocks
                .iter()
                .zip(&xi.blocks)
                .map(|(t, x)| t.apply_inverse(x))
                .collect(),
            euclid: xi.euclid.clone(),
        }
    }
}
