//! Seeded random generators for tests, benches, and property checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spd::{symmetrize, SpdPoint, TangentVec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    crate::datagen::random_orthogonal(rng, d)
}

/// SPD matrix with eigenvalues log-uniform in `[0.1, 10]` and a random basis.
pub fn random_spd<R: Rng>(rng: &mut R, d: usize) -> SpdPoint {
    let q = random_orthogonal(rng, d);
    let eig = DVector::from_fn(d, |_, _| 10f64.powf(rng.random_range(-1.0..1.0)));
    SpdPoint::new_symmetrized(&q * DMatrix::from_diagonal(&eig) * q.transpose())
        .expect("well-conditioned by construction")
}

pub fn random_sym<R: Rng>(rng: &mut R, d: usize) -> TangentVec {
    TangentVec::from_symmetrized(&symmetrize(&gaussian_matrix(rng, d, d)))
}
