//! Fixed-size matrix aliases and small numerical helpers shared by the filters.

use core::f64::consts::PI;

use nalgebra::allocator::Allocator;
use nalgebra::{Const, DefaultAllocator, DimDiff, DimSub, Vector3, U1};

pub use nalgebra::{SMatrix, SVector};

/// Cartesian position or velocity, meters or m/s.
pub type Vec3 = Vector3<f64>;
/// Target state `[x, y, z, vx, vy, vz, turn_rate]`.
pub type StateVec = SVector<f64, 7>;
/// Covariance of a [`StateVec`].
pub type StateCov = SMatrix<f64, 7, 7>;
/// Channel-parameter vector `[toa, aoa_az, aoa_el, aod_az, aod_el]`.
pub type MeasVec = SVector<f64, 5>;
/// Covariance of a [`MeasVec`].
pub type MeasCov = SMatrix<f64, 5, 5>;

/// Smallest eigenvalue kept when a covariance has to be repaired.
pub const EIGEN_FLOOR: f64 = 1e-9;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let two_pi = 2.0 * PI;
    let mut wrapped = angle % two_pi;
    if wrapped <= -PI {
        wrapped += two_pi;
    } else if wrapped > PI {
        wrapped -= two_pi;
    }
    wrapped
}

/// Azimuth and elevation of a direction vector.
pub fn direction_angles(d: &Vec3) -> (f64, f64) {
    let az = d.y.atan2(d.x);
    let el = d.z.atan2(d.x.hypot(d.y));
    (az, el)
}

/// Unit vector pointing at the given azimuth and elevation.
pub fn unit_from_angles(az: f64, el: f64) -> Vec3 {
    let (sa, ca) = az.sin_cos();
    let (se, ce) = el.sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

/// Symmetrizes a covariance and, if it is no longer positive definite,
/// clamps its spectrum at [`EIGEN_FLOOR`].
pub fn regularize<const N: usize>(cov: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N>
where
    Const<N>: DimSub<U1>,
    DefaultAllocator: Allocator<DimDiff<Const<N>, U1>>,
{
    let sym = (cov + cov.transpose()) * 0.5;
    if sym.cholesky().is_some() {
        return sym;
    }
    floor_eigenvalues(&sym, EIGEN_FLOOR)
}

/// Rebuilds a symmetric matrix with every eigenvalue raised to at least `floor`.
pub fn floor_eigenvalues<const N: usize>(cov: &SMatrix<f64, N, N>, floor: f64) -> SMatrix<f64, N, N>
where
    Const<N>: DimSub<U1>,
    DefaultAllocator: Allocator<DimDiff<Const<N>, U1>>,
{
    let eig = cov.symmetric_eigen();
    let clamped = eig.eigenvalues.map(|v| if v < floor { floor } else { v });
    let out = eig.eigenvectors
        * SMatrix::<f64, N, N>::from_diagonal(&clamped)
        * eig.eigenvectors.transpose();
    (out + out.transpose()) * 0.5
}

/// `sin(x) / x`, continuous through zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Squared Mahalanobis distance `dᵀ Σ⁻¹ d`; `None` if `Σ` is not positive definite.
pub fn mahalanobis_sq<const N: usize>(
    delta: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
) -> Option<f64> {
    let chol = cov.cholesky()?;
    let solved = chol.solve(delta);
    Some(delta.dot(&solved))
}

/// Draws zero-mean Gaussian vectors with a fixed covariance.
///
/// The factor is taken from the eigendecomposition so that positive
/// semidefinite covariances with zero rows (unmodeled components) work.
#[derive(Debug, Clone)]
pub struct GaussianSampler<const N: usize> {
    factor: SMatrix<f64, N, N>,
}

impl<const N: usize> GaussianSampler<N>
where
    Const<N>: DimSub<U1>,
    DefaultAllocator: Allocator<DimDiff<Const<N>, U1>>,
{
    pub fn new(cov: &SMatrix<f64, N, N>) -> Self {
        let sym = (cov + cov.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let roots = eig
            .eigenvalues
            .map(|v| if v > 0.0 { v.sqrt() } else { 0.0 });
        let factor = eig.eigenvectors * SMatrix::<f64, N, N>::from_diagonal(&roots);
        Self { factor }
    }
}

impl<const N: usize> GaussianSampler<N> {
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> SVector<f64, N> {
        use rand_distr::{Distribution, StandardNormal};
        let mut white = SVector::<f64, N>::zeros();
        for w in white.iter_mut() {
            *w = StandardNormal.sample(rng);
        }
        self.factor * white
    }
}
