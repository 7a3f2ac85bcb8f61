//! Gaussian-mixture PHD machinery: components, mixtures, the cubature Kalman
//! update against the channel-parameter model, dithering, and pruning/merging.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Cholesky, SMatrix, U5};
use thiserror::Error;

use crate::dynamics::{state_jacobian_vs, step_vs_state, VehicleState};
use crate::geometry::{measure_position, Environment, LandmarkType, Measurement};
use crate::linalg::{regularize, wrap_angle, MeasCov, MeasVec, StateCov, StateVec, Vec3};

const STATE_DIM: usize = 7;
const CUBATURE_POINTS: usize = 2 * STATE_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GmPhdError {
    #[error("innovation covariance is not positive definite")]
    SingularInnovation,
    #[error("measurement model undefined at a cubature point")]
    ModelFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: StateVec,
    pub cov: StateCov,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: StateVec, cov: StateCov) -> Self {
        Self { weight, mean, cov }
    }

    pub fn position(&self) -> Vec3 {
        self.mean.fixed_rows::<3>(0).into_owned()
    }

    pub fn velocity(&self) -> Vec3 {
        self.mean.fixed_rows::<3>(3).into_owned()
    }

    pub fn position_cov(&self) -> SMatrix<f64, 3, 3> {
        self.cov.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn velocity_cov(&self) -> SMatrix<f64, 3, 3> {
        self.cov.fixed_view::<3, 3>(3, 3).into_owned()
    }
}

/// Intensity of one landmark type as a weighted sum of Gaussians. The total
/// weight is the expected number of landmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct GmPhd {
    pub kind: LandmarkType,
    pub components: Vec<GaussianComponent>,
}

impl GmPhd {
    pub fn new(kind: LandmarkType) -> Self {
        Self {
            kind,
            components: Vec::new(),
        }
    }

    pub fn with_components(kind: LandmarkType, components: Vec<GaussianComponent>) -> Self {
        Self { kind, components }
    }

    pub fn mass(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m + c.weight)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn scale(&mut self, factor: f64) {
        for c in &mut self.components {
            c.weight *= factor;
        }
    }

    /// Means of the components whose weight reaches `threshold`.
    pub fn extract(&self, threshold: f64) -> Vec<StateVec> {
        self.components
            .iter()
            .filter(|c| c.weight >= threshold)
            .map(|c| c.mean)
            .collect()
    }
}

/// Cubature-transformed measurement prediction of one component.
///
/// The prediction depends only on the component and the sensor pose, so it
/// is computed once and reused for every measurement in a scan.
#[derive(Debug, Clone)]
pub struct CubaturePrediction {
    pub predicted: MeasVec,
    pub innovation_cov: MeasCov,
    gain: SMatrix<f64, 7, 5>,
    posterior_cov: StateCov,
    chol: Cholesky<f64, U5>,
    log_norm: f64,
    angular: [bool; 5],
}

impl CubaturePrediction {
    /// `z - predicted`, angular entries wrapped to `(-pi, pi]`.
    pub fn innovation(&self, z: &MeasVec) -> MeasVec {
        residual(z, &self.predicted, &self.angular)
    }

    pub fn mahalanobis_sq(&self, z: &MeasVec) -> f64 {
        let nu = self.innovation(z);
        nu.dot(&self.chol.solve(&nu))
    }

    pub fn log_likelihood(&self, z: &MeasVec) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis_sq(z)
    }

    /// Predictive density `N(z; predicted, S)`.
    pub fn likelihood(&self, z: &MeasVec) -> f64 {
        self.log_likelihood(z).exp()
    }

    /// Posterior component; the weight is carried over unchanged.
    pub fn update(&self, comp: &GaussianComponent, z: &MeasVec) -> GaussianComponent {
        GaussianComponent {
            weight: comp.weight,
            mean: comp.mean + self.gain * self.innovation(z),
            cov: self.posterior_cov,
        }
    }

    pub fn posterior_cov(&self) -> &StateCov {
        &self.posterior_cov
    }
}

fn residual(a: &MeasVec, b: &MeasVec, angular: &[bool; 5]) -> MeasVec {
    let mut d = a - b;
    for (i, &wrap) in angular.iter().enumerate() {
        if wrap {
            d[i] = wrap_angle(d[i]);
        }
    }
    d
}

fn sqrt_factor(cov: &StateCov) -> StateCov {
    match cov.cholesky() {
        Some(c) => c.l(),
        None => regularize(cov)
            .cholesky()
            .map(|c| c.l())
            .unwrap_or_else(|| {
                crate::linalg::floor_eigenvalues(cov, 1e-6)
                    .cholesky()
                    .unwrap()
                    .l()
            }),
    }
}

/// Third-degree spherical-radial cubature transform of a component through a
/// nonlinear measurement function `h`, with additive noise `r`.
///
/// `angular` marks measurement entries that are wrapped before averaging and
/// differencing.
pub fn cubature_predict<F>(
    comp: &GaussianComponent,
    mut h: F,
    r: &MeasCov,
    angular: &[bool; 5],
) -> Result<CubaturePrediction, GmPhdError>
where
    F: FnMut(&StateVec) -> Option<MeasVec>,
{
    let factor = sqrt_factor(&comp.cov) * (STATE_DIM as f64).sqrt();
    let mut points = [StateVec::zeros(); CUBATURE_POINTS];
    let mut images = [MeasVec::zeros(); CUBATURE_POINTS];
    for i in 0..STATE_DIM {
        let col = factor.column(i);
        points[i] = comp.mean + col;
        points[i + STATE_DIM] = comp.mean - col;
    }
    for (p, img) in points.iter().zip(images.iter_mut()) {
        *img = h(p).ok_or(GmPhdError::ModelFailure)?;
    }

    // average angular entries relative to a reference image so that values
    // straddling +-pi do not cancel
    let reference = images[0];
    let weight = 1.0 / CUBATURE_POINTS as f64;
    let mut offset = MeasVec::zeros();
    for img in &images {
        offset += residual(img, &reference, angular);
    }
    let mut predicted = reference + offset * weight;
    for (i, &wrap) in angular.iter().enumerate() {
        if wrap {
            predicted[i] = wrap_angle(predicted[i]);
        }
    }

    let mut s = *r;
    let mut cross = SMatrix::<f64, 7, 5>::zeros();
    for (p, img) in points.iter().zip(images.iter()) {
        let dz = residual(img, &predicted, angular);
        let dx = p - comp.mean;
        s += dz * dz.transpose() * weight;
        cross += dx * dz.transpose() * weight;
    }
    let s = (s + s.transpose()) * 0.5;
    let chol = s.cholesky().ok_or(GmPhdError::SingularInnovation)?;
    let gain = chol.solve(&cross.transpose()).transpose();
    let posterior_cov = regularize(&(comp.cov - gain * s * gain.transpose()));
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let log_norm = -0.5 * (5.0 * (2.0 * PI).ln() + log_det);
    Ok(CubaturePrediction {
        predicted,
        innovation_cov: s,
        gain,
        posterior_cov,
        chol,
        log_norm,
        angular: *angular,
    })
}

/// Cubature prediction of a landmark component of type `kind` as observed by
/// `vehicle`.
pub fn predict_measurement(
    comp: &GaussianComponent,
    vehicle: &VehicleState,
    kind: LandmarkType,
    r: &MeasCov,
    bs: &Vec3,
) -> Result<CubaturePrediction, GmPhdError> {
    cubature_predict(
        comp,
        |x| {
            let pos = x.fixed_rows::<3>(0).into_owned();
            measure_position(vehicle, &pos, kind, bs).ok()
        },
        r,
        &Measurement::ANGULAR,
    )
}

/// Cubature Kalman update of one component against one measurement.
///
/// Returns the updated component (weight unchanged) and the predictive
/// likelihood of `z`.
pub fn ckf_update(
    comp: &GaussianComponent,
    z: &Measurement,
    vehicle: &VehicleState,
    kind: LandmarkType,
    r: &MeasCov,
    env: &Environment,
) -> Result<(GaussianComponent, f64), GmPhdError> {
    let pred = predict_measurement(comp, vehicle, kind, r, &env.bs_position)?;
    let zv = z.to_vector();
    Ok((pred.update(comp, &zv), pred.likelihood(&zv)))
}

/// Adds the dithering covariance to a component.
pub fn dither(comp: &GaussianComponent, dither_cov: &StateCov) -> GaussianComponent {
    GaussianComponent {
        weight: comp.weight,
        mean: comp.mean,
        cov: comp.cov + dither_cov,
    }
}

/// Propagates a scatterer component through the coordinated-turn model,
/// linearized at its mean, and adds `process_cov`. The weight is unchanged.
pub fn predict_moving(
    comp: &GaussianComponent,
    dt: f64,
    process_cov: &StateCov,
) -> GaussianComponent {
    let jac = state_jacobian_vs(&comp.mean, dt);
    GaussianComponent {
        weight: comp.weight,
        mean: step_vs_state(&comp.mean, dt),
        cov: regularize(&(jac * comp.cov * jac.transpose() + process_cov)),
    }
}

/// Moment-matched merge of weighted components. `None` for an empty or
/// weightless set.
pub fn merge_components<'a, I>(components: I) -> Option<GaussianComponent>
where
    I: IntoIterator<Item = &'a GaussianComponent> + Clone,
{
    let total: f64 = components.clone().into_iter().map(|c| c.weight).sum();
    if !(total > 0.0) {
        return None;
    }
    let mean = components
        .clone()
        .into_iter()
        .fold(StateVec::zeros(), |acc, c| acc + c.mean * c.weight)
        / total;
    let cov = components.into_iter().fold(StateCov::zeros(), |acc, c| {
        let d = c.mean - mean;
        acc + (c.cov + d * d.transpose()) * c.weight
    }) / total;
    Some(GaussianComponent {
        weight: total,
        mean,
        cov: (cov + cov.transpose()) * 0.5,
    })
}

/// Pruning and merging.
///
/// Drops components lighter than `prune_threshold`, then repeatedly merges
/// every component within squared Mahalanobis distance `merge_threshold`
/// (measured with that component's own covariance) of the heaviest remaining
/// one, and finally keeps at most `max_components` by weight.
pub fn prune_merge(
    phd: &GmPhd,
    prune_threshold: f64,
    merge_threshold: f64,
    max_components: usize,
) -> GmPhd {
    let mut pool: Vec<(GaussianComponent, Option<Cholesky<f64, nalgebra::U7>>)> = phd
        .components
        .iter()
        .filter(|c| c.weight >= prune_threshold && c.weight > 0.0)
        .map(|c| {
            let chol = c.cov.cholesky().or_else(|| regularize(&c.cov).cholesky());
            (c.clone(), chol)
        })
        .collect();

    let mut merged = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        let heaviest = pool
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .0.weight.total_cmp(&b.1 .0.weight))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let center = pool[heaviest].0.mean;
        let (close, far): (Vec<_>, Vec<_>) =
            pool.into_iter().enumerate().partition(|(i, (c, chol))| {
                if *i == heaviest {
                    return true;
                }
                let d = c.mean - center;
                match chol {
                    Some(ch) => d.dot(&ch.solve(&d)) <= merge_threshold,
                    None => false,
                }
            });
        pool = far.into_iter().map(|(_, x)| x).collect();
        let group: Vec<GaussianComponent> = close.into_iter().map(|(_, (c, _))| c).collect();
        if group.len() == 1 {
            merged.extend(group);
        } else if let Some(m) = merge_components(group.iter()) {
            merged.push(GaussianComponent {
                cov: regularize(&m.cov),
                ..m
            });
        }
    }

    merged.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    merged.truncate(max_components);
    GmPhd::with_components(phd.kind, merged)
}
