//! Per-vehicle Rao-Blackwellized particle filter.
//!
//! Each particle carries one vehicle state hypothesis and, conditioned on it,
//! one Gaussian-mixture intensity per landmark type. The base station is a
//! known landmark and contributes a fixed detection term.
//!
//! Births are adaptive: measurements that fall outside the association gate
//! of every known component seed static births at the next prediction. A
//! scatterer birth additionally needs an unexplained measurement in the
//! previous scan whose scatterer inversion lies within reach of a moving
//! vehicle, so isolated clutter and newly seen static landmarks do not seed
//! the scatterer map.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Cholesky, U5};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::dynamics::{step_vehicle, NoiseConfig, VehicleState};
use crate::geometry::{invert_measurement_vector, measure_position, Environment, LandmarkType};
use crate::gmphd::{
    predict_measurement, predict_moving, prune_merge, CubaturePrediction, GaussianComponent, GmPhd,
};
use crate::linalg::{
    regularize, wrap_angle, GaussianSampler, MeasCov, MeasVec, StateCov, StateVec, Vec3,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SlamError {
    #[error("particle count must be at least 1")]
    NoParticles,
    #[error("survival probability must lie in [0, 1]")]
    SurvivalProbability,
    #[error("measurement covariance is not positive definite")]
    MeasurementCovariance,
}

/// Which countermeasures are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Scatterer returns are treated as clutter; no scatterer map.
    Baseline,
    /// Local scatterer map with its own birth and correction.
    Cm1,
    /// Local scatterer map plus ego placement and weighted scatterer fusion
    /// at the base station.
    Full,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Baseline, Mode::Cm1, Mode::Full];

    pub fn tracks_scatterers(self) -> bool {
        !matches!(self, Mode::Baseline)
    }

    pub fn fuses_scatterers(self) -> bool {
        matches!(self, Mode::Full)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Cm1 => "cm1",
            Mode::Full => "full",
        }
    }
}

/// How per-measurement normalizers combine into a particle likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParticleLikelihood {
    /// Sum over the scan of the normalizers.
    Sum,
    /// Poisson-process likelihood: product of normalizers with the
    /// missed-detection exponential.
    Product,
}

/// Poisson clutter, uniform over delay `[0, max_toa]` and the four angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterModel {
    pub poisson_mean: f64,
    pub max_toa: f64,
}

impl ClutterModel {
    /// Measurement-space volume: delay span times two azimuth spans of 2*pi
    /// and two elevation spans of pi.
    pub fn volume(&self) -> f64 {
        self.max_toa * (2.0 * PI) * PI * (2.0 * PI) * PI
    }

    pub fn intensity(&self) -> f64 {
        self.poisson_mean / self.volume()
    }
}

/// Prior on the unobservable part of a new scatterer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScattererBirth {
    /// Diagonal of the velocity covariance, (m/s)^2.
    pub velocity_var: Vec3,
    pub turn_rate_std: f64,
    /// Turn-rate means are drawn uniformly from `(0, turn_rate_max]`.
    pub turn_rate_max: f64,
    /// Largest plausible scatterer speed, used to chain unexplained returns
    /// across consecutive scans.
    pub max_speed: f64,
}

impl Default for ScattererBirth {
    fn default() -> Self {
        Self {
            velocity_var: Vec3::new(100.0, 100.0, 0.09),
            turn_rate_std: PI / 2.0,
            turn_rate_max: 2.0 * PI,
            max_speed: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlamParams {
    pub survival_prob: f64,
    pub birth_weight: f64,
    pub prune_threshold: f64,
    pub merge_threshold: f64,
    pub max_components: usize,
    pub extract_va: f64,
    pub extract_sp: f64,
    pub extract_vs: f64,
    /// Squared Mahalanobis radius in measurement space inside which a
    /// measurement counts as explained by a component.
    pub association_gate: f64,
    /// Optional squared Mahalanobis cutoff beyond which a component's
    /// detection term is taken as zero.
    pub likelihood_gate: Option<f64>,
    pub likelihood: ParticleLikelihood,
    /// Resample when the effective sample size drops below this fraction of
    /// the particle count.
    pub resample_ratio: f64,
    pub scatterer_birth: ScattererBirth,
}

impl Default for SlamParams {
    fn default() -> Self {
        Self {
            survival_prob: 0.99,
            birth_weight: 0.01,
            prune_threshold: 1e-5,
            merge_threshold: 4.0,
            max_components: 100,
            extract_va: 0.5,
            extract_sp: 0.5,
            extract_vs: 0.5,
            association_gate: 50.0,
            likelihood_gate: Some(50.0),
            likelihood: ParticleLikelihood::Sum,
            resample_ratio: 0.5,
            scatterer_birth: ScattererBirth::default(),
        }
    }
}

/// Landmark intensities carried by one particle.
#[derive(Debug, Clone, PartialEq)]
pub struct Maps {
    pub va: GmPhd,
    pub sp: GmPhd,
    pub vs: GmPhd,
}

impl Default for Maps {
    fn default() -> Self {
        Self {
            va: GmPhd::new(LandmarkType::Va),
            sp: GmPhd::new(LandmarkType::Sp),
            vs: GmPhd::new(LandmarkType::Vs),
        }
    }
}

impl Maps {
    pub fn get(&self, kind: LandmarkType) -> Option<&GmPhd> {
        match kind {
            LandmarkType::Va => Some(&self.va),
            LandmarkType::Sp => Some(&self.sp),
            LandmarkType::Vs => Some(&self.vs),
            LandmarkType::Bs => None,
        }
    }

    pub fn get_mut(&mut self, kind: LandmarkType) -> Option<&mut GmPhd> {
        match kind {
            LandmarkType::Va => Some(&mut self.va),
            LandmarkType::Sp => Some(&mut self.sp),
            LandmarkType::Vs => Some(&mut self.vs),
            LandmarkType::Bs => None,
        }
    }
}

/// Unexplained measurement waiting to seed births at the next prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingBirth {
    pub z: MeasVec,
    /// Whether the measurement also seeds a scatterer birth.
    pub scatterer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub state: VehicleState,
    pub weight: f64,
    pub maps: Maps,
    pub pending: Vec<PendingBirth>,
    /// Scatterer inversions of the last scan's unexplained measurements.
    pub recent_candidates: Vec<Vec3>,
}

impl Particle {
    pub fn new(state: VehicleState, weight: f64) -> Self {
        Self {
            state,
            weight,
            maps: Maps::default(),
            pending: Vec::new(),
            recent_candidates: Vec::new(),
        }
    }
}

/// Point estimates produced after each scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub vehicle: VehicleState,
    pub va: Vec<Vec3>,
    pub sp: Vec<Vec3>,
    pub vs: Vec<StateVec>,
}

#[derive(Debug, Clone)]
pub struct LocalFilter {
    pub particles: Vec<Particle>,
    pub mode: Mode,
    pub params: SlamParams,
    pub noise: NoiseConfig,
    pub clutter: ClutterModel,
    motion: GaussianSampler<7>,
    r_chol: Cholesky<f64, U5>,
    r_log_norm: f64,
    last_dt: f64,
}

impl LocalFilter {
    /// Filter with `count` particles drawn from `N(initial, prior_cov)`.
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        initial: &VehicleState,
        prior_cov: &StateCov,
        count: usize,
        mode: Mode,
        params: SlamParams,
        noise: NoiseConfig,
        clutter: ClutterModel,
        rng: &mut R,
    ) -> Result<Self, SlamError> {
        let sampler = GaussianSampler::new(prior_cov);
        let base = initial.to_vector();
        let particles = (0..count)
            .map(|_| {
                let state = VehicleState::from_vector(&(base + sampler.sample(rng)));
                Particle::new(state, 1.0 / count as f64)
            })
            .collect();
        Self::from_particles(particles, mode, params, noise, clutter)
    }

    pub fn from_particles(
        particles: Vec<Particle>,
        mode: Mode,
        params: SlamParams,
        noise: NoiseConfig,
        clutter: ClutterModel,
    ) -> Result<Self, SlamError> {
        if particles.is_empty() {
            return Err(SlamError::NoParticles);
        }
        if !(0.0..=1.0).contains(&params.survival_prob) {
            return Err(SlamError::SurvivalProbability);
        }
        let r = noise.measurement_cov;
        let r_chol = r.cholesky().ok_or(SlamError::MeasurementCovariance)?;
        let log_det: f64 = r_chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        Ok(Self {
            motion: GaussianSampler::new(&noise.vehicle_process_cov),
            r_chol,
            r_log_norm: -0.5 * (5.0 * (2.0 * PI).ln() + log_det),
            last_dt: 0.0,
            particles,
            mode,
            params,
            noise,
            clutter,
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.weight).collect()
    }

    pub fn effective_sample_size(&self) -> f64 {
        effective_sample_size(&self.weights())
    }

    /// Births from the previous scan, vehicle propagation and map
    /// prediction. Particle weights are unchanged.
    pub fn predict<R1, R2>(
        &mut self,
        dt: f64,
        env: &Environment,
        motion_rng: &mut R1,
        birth_rng: &mut R2,
    ) where
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        let scatterer_cov = self.noise.vs_process_cov + self.noise.dither_cov;
        let tracks = self.mode.tracks_scatterers();
        for p in &mut self.particles {
            let mut births = Maps::default();
            for pending in &p.pending {
                for kind in [LandmarkType::Va, LandmarkType::Sp] {
                    if let Some(c) = birth_component(
                        &p.state,
                        &pending.z,
                        kind,
                        env,
                        &self.noise.measurement_cov,
                        self.params.birth_weight,
                    ) {
                        births.get_mut(kind).unwrap().components.push(c);
                    }
                }
                if tracks && pending.scatterer {
                    if let Some(c) = birth_component(
                        &p.state,
                        &pending.z,
                        LandmarkType::Vs,
                        env,
                        &self.noise.measurement_cov,
                        self.params.birth_weight,
                    ) {
                        births.vs.components.push(scatterer_prior(
                            c,
                            &self.params.scatterer_birth,
                            birth_rng,
                        ));
                    }
                }
            }
            p.pending.clear();

            p.state = step_vehicle(&p.state, dt, Some(&self.motion.sample(motion_rng)));

            let ps = self.params.survival_prob;
            p.maps.va.scale(ps);
            p.maps.sp.scale(ps);
            p.maps.va.components.append(&mut births.va.components);
            p.maps.sp.components.append(&mut births.sp.components);
            if tracks {
                let mut vs: Vec<GaussianComponent> = p
                    .maps
                    .vs
                    .components
                    .iter()
                    .map(|c| {
                        let mut n = predict_moving(c, dt, &scatterer_cov);
                        n.weight *= ps;
                        n
                    })
                    .collect();
                vs.extend(
                    births
                        .vs
                        .components
                        .iter()
                        .map(|c| predict_moving(c, dt, &scatterer_cov)),
                );
                p.maps.vs.components = vs;
            } else {
                p.maps.vs.components.clear();
            }
        }
        self.last_dt = dt;
    }

    /// Map correction and particle reweighting against one scan.
    ///
    /// Returns `false` when every particle likelihood vanished and the
    /// weights were reset to uniform.
    pub fn correct(&mut self, scan: &[MeasVec], env: &Environment) -> bool {
        let clutter = self.clutter.intensity();
        let chain_radius = self.params.scatterer_birth.max_speed * self.last_dt;
        let ctx = CorrectionContext {
            env,
            params: &self.params,
            noise: &self.noise,
            r_chol: &self.r_chol,
            r_log_norm: self.r_log_norm,
            clutter,
            expected_clutter: self.clutter.poisson_mean,
            tracks: self.mode.tracks_scatterers(),
            chain_radius,
        };
        let log_likelihoods: Vec<f64> = self
            .particles
            .iter_mut()
            .map(|p| correct_particle(p, scan, &ctx))
            .collect();

        let log_w: Vec<f64> = self
            .particles
            .iter()
            .zip(&log_likelihoods)
            .map(|(p, ll)| p.weight.ln() + ll)
            .collect();
        let max = log_w
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        if max.is_finite() {
            for (p, lw) in self.particles.iter_mut().zip(&log_w) {
                p.weight = if lw.is_finite() {
                    (lw - max).exp()
                } else {
                    0.0
                };
                total += p.weight;
            }
        }
        if !(total > 0.0) || !total.is_finite() {
            log::warn!("all particle likelihoods vanished; resetting to uniform weights");
            let uniform = 1.0 / self.particles.len() as f64;
            for p in &mut self.particles {
                p.weight = uniform;
            }
            return false;
        }
        for p in &mut self.particles {
            p.weight /= total;
        }
        true
    }

    /// Systematic resampling when the effective sample size falls strictly
    /// below `resample_ratio * P`. Returns whether resampling happened.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let n = self.particles.len();
        let weights = self.weights();
        if effective_sample_size(&weights) >= self.params.resample_ratio * n as f64 {
            return false;
        }
        let picks = systematic_indices(&weights, rng.random::<f64>());
        let uniform = 1.0 / n as f64;
        let mut next: Vec<Particle> = picks.iter().map(|&i| self.particles[i].clone()).collect();
        for p in &mut next {
            p.weight = uniform;
        }
        self.particles = next;
        true
    }

    /// Weighted vehicle mean (heading on the circle) and the maps of the
    /// heaviest particle above the extraction thresholds.
    pub fn estimate(&self) -> Estimate {
        let mut acc = StateVec::zeros();
        let (mut s, mut c) = (0.0, 0.0);
        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        for p in &self.particles {
            let w = p.weight / total;
            acc += p.state.to_vector() * w;
            s += w * p.state.heading.sin();
            c += w * p.state.heading.cos();
        }
        let mut vehicle = VehicleState::from_vector(&acc);
        vehicle.heading = s.atan2(c);

        let best = self
            .particles
            .iter()
            .max_by(|a, b| a.weight.total_cmp(&b.weight))
            .expect("filter has particles");
        let positions = |phd: &GmPhd, t: f64| -> Vec<Vec3> {
            phd.extract(t)
                .iter()
                .map(|m| m.fixed_rows::<3>(0).into_owned())
                .collect()
        };
        Estimate {
            vehicle,
            va: positions(&best.maps.va, self.params.extract_va),
            sp: positions(&best.maps.sp, self.params.extract_sp),
            vs: if self.mode.tracks_scatterers() {
                best.maps.vs.extract(self.params.extract_vs)
            } else {
                Vec::new()
            },
        }
    }
}

struct CorrectionContext<'a> {
    env: &'a Environment,
    params: &'a SlamParams,
    noise: &'a NoiseConfig,
    r_chol: &'a Cholesky<f64, U5>,
    r_log_norm: f64,
    clutter: f64,
    expected_clutter: f64,
    tracks: bool,
    chain_radius: f64,
}

struct Detectable {
    kind: LandmarkType,
    index: usize,
    pd: f64,
    pred: Option<CubaturePrediction>,
}

/// Corrects one particle's maps in place and returns its log-likelihood.
fn correct_particle(p: &mut Particle, scan: &[MeasVec], ctx: &CorrectionContext<'_>) -> f64 {
    let env = ctx.env;
    let params = ctx.params;
    let r = &ctx.noise.measurement_cov;
    let veh = p.state;
    let bs = env.bs_position;

    let bs_pd = env.detection_prob_at(&veh.position, &bs, LandmarkType::Bs);
    let bs_pred = measure_position(&veh, &bs, LandmarkType::Bs, &bs).ok();

    let kinds: &[LandmarkType] = if ctx.tracks {
        &[LandmarkType::Va, LandmarkType::Sp, LandmarkType::Vs]
    } else {
        &[LandmarkType::Va, LandmarkType::Sp]
    };
    let mut detectable = Vec::new();
    let mut expected_detections = bs_pd;
    for &kind in kinds {
        let phd = p.maps.get(kind).unwrap();
        for (index, comp) in phd.components.iter().enumerate() {
            // out-of-view components still take part in association so
            // that their returns are not mistaken for new landmarks
            let pred = predict_measurement(comp, &veh, kind, r, &bs).ok();
            let pd = match pred {
                Some(_) => env.detection_prob_at(&veh.position, &comp.position(), kind),
                None => 0.0,
            };
            expected_detections += pd * comp.weight;
            detectable.push(Detectable {
                kind,
                index,
                pd,
                pred,
            });
        }
    }

    // detection terms per measurement: (detectable index, nu)
    let mut terms: Vec<Vec<(usize, f64)>> = Vec::with_capacity(scan.len());
    let mut psi = Vec::with_capacity(scan.len());
    let mut explained = Vec::with_capacity(scan.len());
    for z in scan {
        let mut total = ctx.clutter;
        let mut is_explained = false;
        if let (Some(pred), true) = (&bs_pred, bs_pd > 0.0) {
            let m = known_mahalanobis(z, pred, ctx.r_chol);
            is_explained |= m < params.association_gate;
            if params.likelihood_gate.is_none_or(|g| m < g) {
                total += bs_pd * (ctx.r_log_norm - 0.5 * m).exp();
            }
        }
        let mut row = Vec::new();
        for (i, d) in detectable.iter().enumerate() {
            let Some(pred) = &d.pred else { continue };
            let m = pred.mahalanobis_sq(z);
            is_explained |= m < params.association_gate;
            if d.pd > 0.0 && params.likelihood_gate.is_none_or(|g| m < g) {
                let weight = p.maps.get(d.kind).unwrap().components[d.index].weight;
                let nu = d.pd * weight * pred.log_likelihood(z).exp();
                if nu > 0.0 {
                    row.push((i, nu));
                    total += nu;
                }
            }
        }
        terms.push(row);
        psi.push(total);
        explained.push(is_explained);
    }

    // rebuild each map: missed-detection part plus detection updates
    let mut updated = Maps::default();
    for d in &detectable {
        let comp = &p.maps.get(d.kind).unwrap().components[d.index];
        let missed = (1.0 - d.pd) * comp.weight;
        if missed > 0.0 {
            updated
                .get_mut(d.kind)
                .unwrap()
                .components
                .push(GaussianComponent {
                    weight: missed,
                    ..comp.clone()
                });
        }
    }
    for (j, row) in terms.iter().enumerate() {
        for &(i, nu) in row {
            let w = nu / psi[j];
            if w < params.prune_threshold {
                continue;
            }
            let d = &detectable[i];
            let comp = &p.maps.get(d.kind).unwrap().components[d.index];
            let mut post = d.pred.as_ref().unwrap().update(comp, &scan[j]);
            post.weight = w;
            updated.get_mut(d.kind).unwrap().components.push(post);
        }
    }
    for &kind in kinds {
        let phd = updated.get(kind).unwrap();
        *p.maps.get_mut(kind).unwrap() = prune_merge(
            phd,
            params.prune_threshold,
            params.merge_threshold,
            params.max_components,
        );
    }

    // unexplained measurements seed births; scatterer births need a chained
    // candidate from the previous scan
    let mut candidates = Vec::new();
    p.pending.clear();
    for (z, _) in scan.iter().zip(&explained).filter(|(_, e)| !**e) {
        let mut scatterer = false;
        if ctx.tracks {
            if let Ok(x) = invert_measurement_vector(&veh, z, LandmarkType::Vs, &bs) {
                if env.in_fov(&veh.position, &x, LandmarkType::Vs) {
                    scatterer = p
                        .recent_candidates
                        .iter()
                        .any(|c| (c - x).norm() <= ctx.chain_radius);
                    candidates.push(x);
                }
            }
        }
        p.pending.push(PendingBirth { z: *z, scatterer });
    }
    p.recent_candidates = candidates;

    match params.likelihood {
        ParticleLikelihood::Sum => {
            if scan.is_empty() {
                0.0
            } else {
                psi.iter().sum::<f64>().ln()
            }
        }
        ParticleLikelihood::Product => {
            psi.iter().map(|v| v.ln()).sum::<f64>() - expected_detections - ctx.expected_clutter
        }
    }
}

fn known_mahalanobis(z: &MeasVec, predicted: &MeasVec, chol: &Cholesky<f64, U5>) -> f64 {
    let mut nu = z - predicted;
    for i in 1..5 {
        nu[i] = wrap_angle(nu[i]);
    }
    nu.dot(&chol.solve(&nu))
}

/// Birth component of type `kind` seeded by `z`: position from the inverse
/// measurement map, position covariance from the cubature transform of the
/// measurement noise through that inverse. Velocity and turn rate are zero.
pub fn birth_component(
    vehicle: &VehicleState,
    z: &MeasVec,
    kind: LandmarkType,
    env: &Environment,
    r: &MeasCov,
    weight: f64,
) -> Option<GaussianComponent> {
    let bs = &env.bs_position;
    let center = invert_measurement_vector(vehicle, z, kind, bs).ok()?;
    let factor = r.cholesky()?.l() * 5f64.sqrt();
    let mut points = [Vec3::zeros(); 10];
    for i in 0..5 {
        let col = factor.column(i);
        points[i] = invert_measurement_vector(vehicle, &(z + col), kind, bs).ok()?;
        points[i + 5] = invert_measurement_vector(vehicle, &(z - col), kind, bs).ok()?;
    }
    let mean = points.iter().fold(Vec3::zeros(), |a, p| a + p) / 10.0;
    let spread = points.iter().fold(nalgebra::Matrix3::zeros(), |a, p| {
        let d = p - mean;
        a + d * d.transpose()
    }) / 10.0;
    let mut state = StateVec::zeros();
    state.fixed_rows_mut::<3>(0).copy_from(&center);
    let mut cov = StateCov::zeros();
    cov.fixed_view_mut::<3, 3>(0, 0).copy_from(&spread);
    Some(GaussianComponent::new(weight, state, regularize(&cov)))
}

/// Adds a random velocity and turn-rate hypothesis to a positional birth.
pub fn scatterer_prior<R: Rng + ?Sized>(
    mut comp: GaussianComponent,
    prior: &ScattererBirth,
    rng: &mut R,
) -> GaussianComponent {
    for i in 0..3 {
        let std = prior.velocity_var[i].sqrt();
        comp.mean[3 + i] = Normal::new(0.0, std).map_or(0.0, |n| n.sample(rng));
        comp.cov[(3 + i, 3 + i)] = prior.velocity_var[i];
    }
    comp.mean[6] = prior.turn_rate_max * (1.0 - rng.random::<f64>());
    comp.cov[(6, 6)] = prior.turn_rate_std * prior.turn_rate_std;
    comp.cov = regularize(&comp.cov);
    comp
}

pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    if sq > 0.0 {
        1.0 / sq
    } else {
        0.0
    }
}

/// Systematic resampling indices for normalized weights and a uniform
/// offset `u` in `[0, 1)`.
pub fn systematic_indices(weights: &[f64], u: f64) -> Vec<usize> {
    let n = weights.len();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights.first().copied().unwrap_or(0.0);
    let mut i = 0;
    for k in 0..n {
        let target = (k as f64 + u) / n as f64;
        while cumulative < target && i + 1 < n {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i);
    }
    out
}
