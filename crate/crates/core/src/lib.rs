//! Gaussian mixture fitting by Riemannian optimization on the manifold of
//! symmetric positive definite matrices, with an EM baseline, a synthetic
//! data generator, and a benchmark harness.
//!
//! The mixture is optimized in an augmented form: each component's mean and
//! covariance are embedded into one `(d+1)×(d+1)` SPD block, and mixing
//! weights are carried as unconstrained logits.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod datagen;
pub mod em;
pub mod error;
pub mod exec;
pub mod fit;
pub mod objective;
pub mod optim;
pub mod product;
pub mod spd;
pub mod testing;

pub use error::{GmmError, Result};
