//! Riemannian geometry of the manifold of symmetric positive definite
//! matrices under the affine-invariant metric `tr(S⁻¹ ξ S⁻¹ η)`.
//!
//! Every primitive is evaluated in a congruence form
//! (`S^{1/2} f(S^{-1/2} ξ S^{-1/2}) S^{1/2}`) so outputs are symmetric by
//! construction, and every output matrix is explicitly symmetrized.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{check_dim, GmmError, Result};

/// Relative Frobenius tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Smallest admissible Cholesky pivot relative to the largest diagonal entry.
pub const PIVOT_TOL: f64 = 1e-13;

/// Returns `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / scale
}

fn check_square_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(GmmError::InvalidArgument(format!(
            "matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(GmmError::InvalidArgument("empty matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(GmmError::InvalidArgument("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let mut scaled = u.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let fl = f(lam);
        scaled.column_mut(j).scale_mut(fl);
    }
    symmetrize(&(scaled * u.transpose()))
}

/// A point on the SPD manifold.
///
/// The Cholesky factor is computed at construction and doubles as the
/// positive-definiteness check. Inverse and square roots are cached on first
/// use; the caches are `OnceLock`s so shared references are thread-safe.
#[derive(Debug, Clone)]
pub struct SpdPoint {
    mat: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    inv: OnceLock<DMatrix<f64>>,
    roots: OnceLock<(DMatrix<f64>, DMatrix<f64>)>,
}

impl SpdPoint {
    /// Validates `mat` (square, finite, symmetric, positive definite).
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        check_square_finite(&mat)?;
        let asym = asymmetry(&mat);
        if asym > SYMMETRY_TOL {
            return Err(GmmError::NotSpd(format!(
                "relative asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:e}"
            )));
        }
        Self::from_symmetric(symmetrize(&mat))
    }

    /// Like [`SpdPoint::new`] but symmetrizes first instead of rejecting
    /// round-off asymmetry.
    pub fn new_symmetrized(mat: DMatrix<f64>) -> Result<Self> {
        check_square_finite(&mat)?;
        Self::from_symmetric(symmetrize(&mat))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_symmetric(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    fn from_symmetric(mat: DMatrix<f64>) -> Result<Self> {
        let max_diag = mat.diagonal().max();
        let chol = Cholesky::new(mat.clone())
            .ok_or_else(|| GmmError::NotSpd("Cholesky factorization failed".into()))?;
        let chol_l = chol.l();
        let min_pivot = chol_l
            .diagonal()
            .iter()
            .map(|v| v * v)
            .fold(f64::INFINITY, f64::min);
        if !(min_pivot > PIVOT_TOL * max_diag) {
            return Err(GmmError::NotSpd(format!(
                "smallest pivot {min_pivot:.3e} below {PIVOT_TOL:e} x max diagonal {max_diag:.3e}"
            )));
        }
        Ok(Self {
            mat,
            chol_l,
            inv: OnceLock::new(),
            roots: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    /// Lower-triangular Cholesky factor `L` with `S = L Lᵀ`.
    pub fn chol_l(&self) -> &DMatrix<f64> {
        &self.chol_l
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol_l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        self.inv.get_or_init(|| {
            let n = self.dim();
            let l_inv = self
                .chol_l
                .solve_lower_triangular(&DMatrix::identity(n, n))
                .expect("Cholesky factor has a positive diagonal");
            symmetrize(&(l_inv.transpose() * l_inv))
        })
    }

    fn roots(&self) -> &(DMatrix<f64>, DMatrix<f64>) {
        self.roots.get_or_init(|| {
            let eig = self.mat.clone().symmetric_eigen();
            let u = &eig.eigenvectors;
            let mut half = u.clone();
            let mut neg_half = u.clone();
            for (j, &lam) in eig.eigenvalues.iter().enumerate() {
                let r = lam.max(f64::MIN_POSITIVE).sqrt();
                half.column_mut(j).scale_mut(r);
                neg_half.column_mut(j).scale_mut(1.0 / r);
            }
            (
                symmetrize(&(half * u.transpose())),
                symmetrize(&(neg_half * u.transpose())),
            )
        })
    }

    /// Principal square root `S^{1/2}`.
    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.roots().0
    }

    /// `S^{-1/2}`.
    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.roots().1
    }

    /// Quadratic form `xᵀ S x`.
    pub fn quad(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.mat * x))
    }
}

impl PartialEq for SpdPoint {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}

/// A symmetric matrix viewed as a tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec {
    mat: DMatrix<f64>,
}

impl TangentVec {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        check_square_finite(&mat)?;
        let asym = asymmetry(&mat);
        if asym > SYMMETRY_TOL {
            return Err(GmmError::InvalidArgument(format!(
                "tangent vector asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:e}"
            )));
        }
        Ok(Self {
            mat: symmetrize(&mat),
        })
    }

    /// Symmetrizes `mat`. Does not check finiteness.
    pub fn from_symmetrized(mat: &DMatrix<f64>) -> Self {
        Self {
            mat: symmetrize(mat),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mat: &self.mat * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat - &other.mat,
        }
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        self.mat.zip_apply(&x.mat, |s, v| *s += a * v);
    }

    pub fn is_finite(&self) -> bool {
        self.mat.iter().all(|v| v.is_finite())
    }
}

/// `tr(S⁻¹ ξ S⁻¹ η)`.
pub fn metric(base: &SpdPoint, xi: &TangentVec, eta: &TangentVec) -> Result<f64> {
    check_dim(base.dim(), xi.dim())?;
    check_dim(base.dim(), eta.dim())?;
    let inv = base.inverse();
    let a = inv * &xi.mat;
    let b = inv * &eta.mat;
    // tr(AB) = Σ_ij A_ij B_ji
    Ok(a.component_mul(&b.transpose()).sum())
}

/// `½ S (G + Gᵀ) S`.
pub fn egrad_to_rgrad(base: &SpdPoint, egrad: &DMatrix<f64>) -> Result<TangentVec> {
    check_dim(base.dim(), egrad.nrows())?;
    check_dim(base.dim(), egrad.ncols())?;
    let g = symmetrize(egrad);
    Ok(TangentVec::from_symmetrized(&(&base.mat * g * &base.mat)))
}

/// Exponential map `S exp(S⁻¹ ξ)`, evaluated as
/// `S^{1/2} exp(S^{-1/2} ξ S^{-1/2}) S^{1/2}`.
pub fn expmap(base: &SpdPoint, xi: &TangentVec) -> Result<SpdPoint> {
    check_dim(base.dim(), xi.dim())?;
    if !xi.is_finite() {
        return Err(GmmError::InvalidArgument("tangent vector has non-finite entries".into()));
    }
    GeodesicRay::new(base, xi).point(1.0)
}

/// Parallel transport of `xi` from `from` to `to` along the connecting
/// geodesic: `E ξ Eᵀ` with `E = (S₂ S₁⁻¹)^{1/2}`.
pub fn transport(from: &SpdPoint, to: &SpdPoint, xi: &TangentVec) -> Result<TangentVec> {
    check_dim(from.dim(), to.dim())?;
    check_dim(from.dim(), xi.dim())?;
    let e = transport_matrix(from, to);
    Ok(TangentVec::from_symmetrized(&(&e * &xi.mat * e.transpose())))
}

/// `E = S₁^{1/2} (S₁^{-1/2} S₂ S₁^{-1/2})^{1/2} S₁^{-1/2}`.
pub fn transport_matrix(from: &SpdPoint, to: &SpdPoint) -> DMatrix<f64> {
    let (h, ih) = (from.sqrt(), from.inv_sqrt());
    let mid = symmetrize(&(ih * &to.mat * ih));
    let root = sym_fn(&mid, |l| l.max(0.0).sqrt());
    h * root * ih
}

/// Point `t` of the geodesic from `a` to `b`:
/// `a^{1/2} (a^{-1/2} b a^{-1/2})^t a^{1/2}`.
pub fn geodesic(a: &SpdPoint, b: &SpdPoint, t: f64) -> Result<SpdPoint> {
    check_dim(a.dim(), b.dim())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(GmmError::InvalidArgument(format!("geodesic parameter {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    let (h, ih) = (a.sqrt(), a.inv_sqrt());
    let mid = symmetrize(&(ih * &b.mat * ih));
    let pow = sym_fn(&mid, |l| l.max(f64::MIN_POSITIVE).powf(t));
    SpdPoint::new_symmetrized(h * pow * h).map_err(breakdown)
}

fn breakdown(e: GmmError) -> GmmError {
    match e {
        GmmError::NotSpd(msg) | GmmError::InvalidArgument(msg) => GmmError::NumericalBreakdown(msg),
        other => other,
    }
}

/// The geodesic `t ↦ S^{1/2} exp(t A) S^{1/2}`, `A = S^{-1/2} ξ S^{-1/2}`,
/// with its eigendecomposition cached so that points, velocities, and
/// transports along it cost a few matrix products each.
#[derive(Debug, Clone)]
pub struct GeodesicRay {
    // S^{1/2} U
    w: DMatrix<f64>,
    // S^{-1/2} U
    w_inv: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl GeodesicRay {
    pub fn new(base: &SpdPoint, xi: &TangentVec) -> Self {
        let ih = base.inv_sqrt();
        let a = symmetrize(&(ih * &xi.mat * ih));
        let eig = a.symmetric_eigen();
        Self {
            w: base.sqrt() * &eig.eigenvectors,
            w_inv: ih * &eig.eigenvectors,
            eigenvalues: eig.eigenvalues,
        }
    }

    fn congruence(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.w.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(f(lam));
        }
        symmetrize(&(scaled * self.w.transpose()))
    }

    pub fn point(&self, t: f64) -> Result<SpdPoint> {
        let m = self.congruence(|l| (t * l).exp());
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GmmError::NumericalBreakdown(format!(
                "exponential map overflowed at step {t:e}"
            )));
        }
        SpdPoint::new_symmetrized(m).map_err(breakdown)
    }

    /// Velocity of the curve at `t`; equals the transport of `ξ` to `point(t)`.
    pub fn velocity(&self, t: f64) -> TangentVec {
        TangentVec {
            mat: self.congruence(|l| l * (t * l).exp()),
        }
    }

    /// Transport from the base point to `point(t)`.
    pub fn transport(&self, t: f64) -> StepTransport {
        let scale = |sign: f64| {
            let mut m = self.w.clone();
            for (j, &lam) in self.eigenvalues.iter().enumerate() {
                m.column_mut(j).scale_mut((sign * 0.5 * t * lam).exp());
            }
            m * self.w_inv.transpose()
        };
        StepTransport {
            e: scale(1.0),
            e_inv: scale(-1.0),
        }
    }
}

/// A cached transport `ξ ↦ E ξ Eᵀ` between two points, with its inverse.
#[derive(Debug, Clone)]
pub struct StepTransport {
    e: DMatrix<f64>,
    e_inv: DMatrix<f64>,
}

impl StepTransport {
    pub fn between(from: &SpdPoint, to: &SpdPoint) -> Self {
        let e = transport_matrix(from, to);
        let e_inv = transport_matrix(to, from);
        Self { e, e_inv }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            e: DMatrix::identity(dim, dim),
            e_inv: DMatrix::identity(dim, dim),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn apply(&self, xi: &TangentVec) -> TangentVec {
        TangentVec::from_symmetrized(&(&self.e * &xi.mat * self.e.transpose()))
    }

    pub fn apply_inverse(&self, xi: &TangentVec) -> TangentVec {
        TangentVec::from_symmetrized(&(&self.e_inv * &xi.mat * self.e_inv.transpose()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{random_spd, random_sym, rng};
    use approx_eq::rel;

    mod approx_eq {
        use nalgebra::DMatrix;
        pub fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
            (a - b).norm() / b.norm().max(1e-300)
        }
    }

    fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, data.len() / rows, data)
    }

    /// Scaling-and-squaring Taylor exponential for a general square matrix.
    fn expm_oracle(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let norm = a.norm();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let scaled = a / 2f64.powi(squarings);
        let mut term = DMatrix::identity(n, n);
        let mut sum = DMatrix::identity(n, n);
        for k in 1..30 {
            term = &term * &scaled / k as f64;
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn metric_trivial_values() {
        let id = SpdPoint::identity(2);
        let xi = TangentVec::new(DMatrix::identity(2, 2)).unwrap();
        assert!((metric(&id, &xi, &xi).unwrap() - 2.0).abs() < 1e-15);

        let s = SpdPoint::new(m(1, &[2.0])).unwrap();
        let x = TangentVec::new(m(1, &[2.0])).unwrap();
        assert!((metric(&s, &x, &x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn metric_matches_dense_product_oracle() {
        let mut r = rng(1);
        let s = random_spd(&mut r, 3);
        let xi = random_sym(&mut r, 3);
        let eta = random_sym(&mut r, 3);
        let inv = s.matrix().clone().try_inverse().unwrap();
        let oracle = (&inv * xi.matrix() * &inv * eta.matrix()).trace();
        let got = metric(&s, &xi, &eta).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
    }

    #[test]
    fn metric_rejects_dimension_mismatch() {
        let s = SpdPoint::identity(2);
        let xi = TangentVec::zeros(3);
        assert!(matches!(
            metric(&s, &xi, &xi),
            Err(GmmError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn egrad_conversion_examples() {
        let id = SpdPoint::identity(2);
        let g = m(2, &[1.0, 2.0, 2.0, 5.0]);
        assert_eq!(egrad_to_rgrad(&id, &g).unwrap().matrix(), &g);
        let g = m(2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(
            egrad_to_rgrad(&id, &g).unwrap().matrix(),
            &m(2, &[0.0, 0.5, 0.5, 0.0])
        );
    }

    #[test]
    fn egrad_conversion_is_dual_to_directional_derivative() {
        let mut r = rng(2);
        let s = random_spd(&mut r, 4);
        let g = random_sym(&mut r, 4);
        let rg = egrad_to_rgrad(&s, g.matrix()).unwrap();
        for _ in 0..10 {
            let xi = random_sym(&mut r, 4);
            let lhs = metric(&s, &rg, &xi).unwrap();
            let rhs = (g.matrix() * xi.matrix()).trace();
            assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1e-300), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn expmap_examples() {
        let mut r = rng(3);
        let s = random_spd(&mut r, 3);
        let same = expmap(&s, &TangentVec::zeros(3)).unwrap();
        assert!(rel(same.matrix(), s.matrix()) < 1e-14);

        let one = SpdPoint::identity(1);
        let e = expmap(&one, &TangentVec::new(m(1, &[1.0])).unwrap()).unwrap();
        assert!((e.matrix()[(0, 0)] - std::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn expmap_matches_scaling_and_squaring_oracle() {
        let mut r = rng(4);
        for _ in 0..5 {
            let s = random_spd(&mut r, 2);
            let xi = random_sym(&mut r, 2);
            let got = expmap(&s, &xi).unwrap();
            let sinv = s.matrix().clone().try_inverse().unwrap();
            let oracle = s.matrix() * expm_oracle(&(sinv * xi.matrix()));
            assert!(rel(got.matrix(), &oracle) < 1e-9);
        }
    }

    #[test]
    fn expmap_rejects_non_finite_tangent() {
        let s = SpdPoint::identity(2);
        let xi = TangentVec::from_symmetrized(&m(2, &[f64::NAN, 0.0, 0.0, 1.0]));
        assert!(matches!(expmap(&s, &xi), Err(GmmError::InvalidArgument(_))));
    }

    #[test]
    fn transport_examples() {
        let mut r = rng(5);
        let s = random_spd(&mut r, 3);
        let xi = random_sym(&mut r, 3);
        let same = transport(&s, &s, &xi).unwrap();
        assert!(rel(same.matrix(), xi.matrix()) < 1e-12);

        let a = SpdPoint::new(m(1, &[1.0])).unwrap();
        let b = SpdPoint::new(m(1, &[4.0])).unwrap();
        let t = transport(&a, &b, &TangentVec::new(m(1, &[3.0])).unwrap()).unwrap();
        assert!((t.matrix()[(0, 0)] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn transport_is_isometry() {
        let mut r = rng(6);
        let a = random_spd(&mut r, 4);
        let b = random_spd(&mut r, 4);
        for _ in 0..20 {
            let xi = random_sym(&mut r, 4);
            let eta = random_sym(&mut r, 4);
            let before = metric(&a, &xi, &eta).unwrap();
            let after = metric(
                &b,
                &transport(&a, &b, &xi).unwrap(),
                &transport(&a, &b, &eta).unwrap(),
            )
            .unwrap();
            assert!((after - before).abs() <= 1e-10 * (1.0 + before.abs()));
        }
    }

    #[test]
    fn transport_matrix_squares_to_ratio() {
        let mut r = rng(7);
        let a = random_spd(&mut r, 3);
        let b = random_spd(&mut r, 3);
        let e = transport_matrix(&a, &b);
        let ratio = b.matrix() * a.inverse();
        assert!(rel(&(&e * &e), &ratio) < 1e-10);
    }

    #[test]
    fn geodesic_examples() {
        let a = SpdPoint::new(m(1, &[1.0])).unwrap();
        let b = SpdPoint::new(m(1, &[4.0])).unwrap();
        let mid = geodesic(&a, &b, 0.5).unwrap();
        assert!((mid.matrix()[(0, 0)] - 2.0).abs() < 1e-14);
        assert_eq!(geodesic(&a, &b, 0.0).unwrap(), a);
        assert_eq!(geodesic(&a, &b, 1.0).unwrap(), b);
        assert!(matches!(geodesic(&a, &b, 1.5), Err(GmmError::InvalidArgument(_))));
        assert!(matches!(geodesic(&a, &b, -0.1), Err(GmmError::InvalidArgument(_))));
    }

    #[test]
    fn geodesic_midpoint_matches_eigendecomposition_oracle() {
        let mut r = rng(8);
        let a = random_spd(&mut r, 3);
        let b = random_spd(&mut r, 3);
        // Oracle: the geometric mean X is the unique SPD solution of X a⁻¹ X = b,
        // computed as a^{1/2}(a^{-1/2} b a^{-1/2})^{1/2} a^{1/2} through an
        // independent eigendecomposition of each factor.
        let ea = a.matrix().clone().symmetric_eigen();
        let half = &ea.eigenvectors
            * DMatrix::from_diagonal(&ea.eigenvalues.map(f64::sqrt))
            * ea.eigenvectors.transpose();
        let ihalf = half.clone().try_inverse().unwrap();
        let mid = &ihalf * b.matrix() * &ihalf;
        let em = mid.symmetric_eigen();
        let root = &em.eigenvectors
            * DMatrix::from_diagonal(&em.eigenvalues.map(f64::sqrt))
            * em.eigenvectors.transpose();
        let oracle = &half * root * &half;
        let got = geodesic(&a, &b, 0.5).unwrap();
        assert!(rel(got.matrix(), &oracle) < 1e-10);
        // and it satisfies the Riccati characterization
        let check = got.matrix() * a.inverse() * got.matrix();
        assert!(rel(&check, b.matrix()) < 1e-10);
    }

    #[test]
    fn ray_transport_matches_general_transport() {
        let mut r = rng(9);
        let s = random_spd(&mut r, 3);
        let xi = random_sym(&mut r, 3);
        let ray = GeodesicRay::new(&s, &xi);
        let t = 0.7;
        let to = ray.point(t).unwrap();
        let eta = random_sym(&mut r, 3);
        let via_ray = ray.transport(t).apply(&eta);
        let direct = transport(&s, &to, &eta).unwrap();
        assert!(rel(via_ray.matrix(), direct.matrix()) < 1e-10);
        let back = ray.transport(t).apply_inverse(&via_ray);
        assert!(rel(back.matrix(), eta.matrix()) < 1e-10);
        // velocity is the transported direction
        let vel = ray.velocity(t);
        let tx = transport(&s, &to, &xi).unwrap();
        assert!(rel(vel.matrix(), tx.matrix()) < 1e-10);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        assert!(SpdPoint::new(m(2, &[1.0, 0.0, 0.0, -1.0])).is_err());
        assert!(SpdPoint::new(m(2, &[1.0, 0.5, 0.0, 1.0])).is_err());
        assert!(SpdPoint::new(m(2, &[1.0, 0.0, 0.0, 1e-14])).is_err());
        assert!(SpdPoint::new(DMatrix::zeros(2, 3)).is_err());
        assert!(SpdPoint::new_symmetrized(m(2, &[2.0, 0.5, 0.4, 2.0])).is_ok());
    }
}
