//! Base-station map fusion.
//!
//! Vehicles upload particle-averaged maps together with the region they
//! could observe since their last upload. Static maps are fused with even
//! weights; scatterer maps are predicted forward at the base station, fused
//! with covariance-based weights, and seeded with the uploading vehicle's
//! own posterior.

use alloc::vec::Vec;

use nalgebra::{SMatrix, SVector};
use thiserror::Error;

use crate::geometry::{Environment, LandmarkType};
use crate::gmphd::{merge_components, predict_moving, prune_merge, GaussianComponent, GmPhd};
use crate::linalg::{regularize, StateCov, StateVec, Vec3};
use crate::local_slam::{LocalFilter, Particle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FusionError {
    #[error("covariance is singular")]
    SingularCovariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    pub prune_threshold: f64,
    pub merge_threshold: f64,
    /// Merge gate used when pooling the particles' maps. Copies of one
    /// landmark differ between particles by the pose spread, which is
    /// usually wider than each copy's own covariance.
    pub average_merge_threshold: f64,
    pub max_components: usize,
    /// Gate on the position-block distance.
    pub location_gate: f64,
    /// Gate on the velocity-block distance (scatterers only).
    pub velocity_gate: f64,
    /// Weight of an unmatched static base-station component that the
    /// uploading vehicle could have observed.
    pub static_unmatched_in_fov: f64,
    /// Same for scatterer components.
    pub scatterer_unmatched_in_fov: f64,
    pub survival_prob: f64,
    /// Floor added to the ego posterior covariance.
    pub ego_cov_floor: StateVec,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            prune_threshold: 0.1,
            merge_threshold: 4.0,
            average_merge_threshold: 100.0,
            max_components: 100,
            location_gate: 20.0,
            velocity_gate: 20.0,
            static_unmatched_in_fov: 0.5,
            scatterer_unmatched_in_fov: 0.25,
            survival_prob: 0.99,
            ego_cov_floor: StateVec::from_column_slice(&[0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 1e-4]),
        }
    }
}

/// Larger of the two directed squared Mahalanobis distances between two
/// Gaussians.
pub fn msm_distance<const D: usize>(
    mean_a: &SVector<f64, D>,
    cov_a: &SMatrix<f64, D, D>,
    mean_b: &SVector<f64, D>,
    cov_b: &SMatrix<f64, D, D>,
) -> Result<f64, FusionError> {
    let d = mean_a - mean_b;
    let qa = cov_a.cholesky().ok_or(FusionError::SingularCovariance)?;
    let qb = cov_b.cholesky().ok_or(FusionError::SingularCovariance)?;
    Ok(d.dot(&qa.solve(&d)).max(d.dot(&qb.solve(&d))))
}

fn position_distance(a: &GaussianComponent, b: &GaussianComponent) -> f64 {
    msm_distance(
        &a.position(),
        &a.position_cov(),
        &b.position(),
        &b.position_cov(),
    )
    .or_else(|_| {
        msm_distance(
            &a.position(),
            &regularize(&a.position_cov()),
            &b.position(),
            &regularize(&b.position_cov()),
        )
    })
    .unwrap_or(f64::INFINITY)
}

fn velocity_distance(a: &GaussianComponent, b: &GaussianComponent) -> f64 {
    msm_distance(
        &a.velocity(),
        &regularize(&a.velocity_cov()),
        &b.velocity(),
        &regularize(&b.velocity_cov()),
    )
    .unwrap_or(f64::INFINITY)
}

/// Region observed by a vehicle since its last upload, kept as the sampled
/// vehicle positions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccumulatedFov {
    pub positions: Vec<Vec3>,
    pub gamma_d: f64,
}

impl AccumulatedFov {
    pub fn new(gamma_d: f64) -> Self {
        Self {
            positions: Vec::new(),
            gamma_d,
        }
    }

    pub fn push(&mut self, position: Vec3) {
        self.positions.push(position);
    }

    pub fn clear(&mut self) {
        self.positions.clear();
    }

    /// Whether some sampled pose detected `point` with probability at least
    /// `gamma_d`.
    pub fn contains(&self, env: &Environment, point: &Vec3, kind: LandmarkType) -> bool {
        self.positions
            .iter()
            .any(|p| env.detection_prob_at(p, point, kind) >= self.gamma_d)
    }
}

/// Particle-weighted union of one map type, merged and then pruned. Each
/// particle's copy of a landmark carries only its share of the weight, so
/// pruning must wait until the copies have merged.
pub fn average_map(particles: &[Particle], kind: LandmarkType, params: &FusionParams) -> GmPhd {
    let mut union = GmPhd::new(kind);
    for p in particles {
        if let Some(phd) = p.maps.get(kind) {
            union
                .components
                .extend(phd.components.iter().map(|c| GaussianComponent {
                    weight: c.weight * p.weight,
                    ..c.clone()
                }));
        }
    }
    let merged = prune_merge(&union, 0.0, params.average_merge_threshold, usize::MAX);
    prune_merge(
        &merged,
        params.prune_threshold,
        params.merge_threshold,
        params.max_components,
    )
}

/// Gaussian approximation of a vehicle posterior in scatterer coordinates
/// `[x, v, turn_rate]`, with unit weight.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoPosterior {
    pub mean: StateVec,
    pub cov: StateCov,
}

impl EgoPosterior {
    /// Weighted sample moments of the particles mapped to scatterer
    /// coordinates, plus a diagonal floor.
    pub fn from_particles(particles: &[Particle], floor: &StateVec) -> Self {
        let total: f64 = particles.iter().map(|p| p.weight).sum();
        let mapped: Vec<(f64, StateVec)> = particles
            .iter()
            .map(|p| (p.weight / total, p.state.as_scatterer().state))
            .collect();
        let mean = mapped
            .iter()
            .fold(StateVec::zeros(), |a, (w, x)| a + x * *w);
        let spread = mapped.iter().fold(StateCov::zeros(), |a, (w, x)| {
            let d = x - mean;
            a + d * d.transpose() * *w
        });
        Self {
            mean,
            cov: regularize(&(spread + StateCov::from_diagonal(floor))),
        }
    }

    pub fn component(&self) -> GaussianComponent {
        GaussianComponent::new(1.0, self.mean, self.cov)
    }

    pub fn position(&self) -> Vec3 {
        self.mean.fixed_rows::<3>(0).into_owned()
    }

    /// Whether a component lies within the location gate of this posterior.
    pub fn matches(&self, comp: &GaussianComponent, location_gate: f64) -> bool {
        position_distance(comp, &self.component()) < location_gate
    }
}

/// Removes scatterer components gated with the ego posterior and appends the
/// posterior as a unit-weight component.
pub fn place_ego(avg_vs: &GmPhd, ego: &EgoPosterior, location_gate: f64) -> GmPhd {
    let mut components: Vec<GaussianComponent> = avg_vs
        .components
        .iter()
        .filter(|c| !ego.matches(c, location_gate))
        .cloned()
        .collect();
    components.push(ego.component());
    GmPhd::with_components(avg_vs.kind, components)
}

/// Greedy one-to-one matching by ascending distance over gated pairs.
fn greedy_match(
    distances: &[(usize, usize, f64)],
    rows: usize,
    cols: usize,
) -> (Vec<Option<usize>>, Vec<bool>) {
    let mut order: Vec<&(usize, usize, f64)> = distances.iter().collect();
    order.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut row_match = alloc::vec![None; rows];
    let mut col_used = alloc::vec![false; cols];
    for &&(i, j, _) in &order {
        if row_match[i].is_none() && !col_used[j] {
            row_match[i] = Some(j);
            col_used[j] = true;
        }
    }
    (row_match, col_used)
}

/// Weighted union before pruning and merging, exposed for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub fused: GmPhd,
    pub matched: usize,
    pub bs_unmatched: usize,
    pub vehicle_unmatched: usize,
}

/// Even-weight fusion of a static map. Matched pairs are halved and merged;
/// unmatched vehicle components are kept; unmatched base-station components
/// are halved when the vehicle could have observed them.
pub fn fuse_static(
    bs_map: &GmPhd,
    veh_map: &GmPhd,
    fov: &AccumulatedFov,
    env: &Environment,
    params: &FusionParams,
) -> FusionOutcome {
    let mut gated = Vec::new();
    for (i, a) in bs_map.components.iter().enumerate() {
        for (j, b) in veh_map.components.iter().enumerate() {
            let d = position_distance(a, b);
            if d < params.location_gate {
                gated.push((i, j, d));
            }
        }
    }
    let (row_match, col_used) = greedy_match(&gated, bs_map.len(), veh_map.len());
    let mut union = Vec::new();
    let mut outcome = FusionOutcome {
        fused: GmPhd::new(bs_map.kind),
        matched: 0,
        bs_unmatched: 0,
        vehicle_unmatched: 0,
    };
    for (i, a) in bs_map.components.iter().enumerate() {
        match row_match[i] {
            Some(j) => {
                let b = &veh_map.components[j];
                let pair = [scaled(a, 0.5), scaled(b, 0.5)];
                union.extend(merge_components(pair.iter()));
                outcome.matched += 1;
            }
            None => {
                let beta = if fov.contains(env, &a.position(), bs_map.kind) {
                    params.static_unmatched_in_fov
                } else {
                    1.0
                };
                union.push(scaled(a, beta));
                outcome.bs_unmatched += 1;
            }
        }
    }
    for (j, b) in veh_map.components.iter().enumerate() {
        if !col_used[j] {
            union.push(b.clone());
            outcome.vehicle_unmatched += 1;
        }
    }
    outcome.fused = prune_merge(
        &GmPhd::with_components(bs_map.kind, union),
        params.prune_threshold,
        params.merge_threshold,
        params.max_components,
    );
    outcome
}

fn scaled(c: &GaussianComponent, beta: f64) -> GaussianComponent {
    GaussianComponent {
        weight: c.weight * beta,
        ..c.clone()
    }
}

/// Covariance-based fusion weights of a matched pair; they sum to one.
pub fn matched_weights(cov_bs: &StateCov, cov_veh: &StateCov) -> (f64, f64) {
    let inv_a = 7.0 / cov_bs.trace();
    let inv_b = 7.0 / cov_veh.trace();
    let a = inv_a / (inv_a + inv_b);
    (a, 1.0 - a)
}

/// Base-station scatterer map predicted over `steps` intervals of `dt`
/// without births.
pub fn predict_bs_vs(
    fused_vs: &GmPhd,
    steps: usize,
    dt: f64,
    process_cov: &StateCov,
    survival_prob: f64,
) -> GmPhd {
    let mut out = fused_vs.clone();
    for _ in 0..steps {
        for c in &mut out.components {
            *c = predict_moving(c, dt, process_cov);
            c.weight *= survival_prob;
        }
    }
    out
}

/// Scatterer fusion: pairs must be close in both position and velocity;
/// matched pairs are merged with covariance-based weights, unmatched vehicle
/// components are kept, and unmatched base-station components inside the
/// observed region are down-weighted.
pub fn fuse_vs(
    bs_vs: &GmPhd,
    veh_vs: &GmPhd,
    fov: &AccumulatedFov,
    env: &Environment,
    params: &FusionParams,
) -> FusionOutcome {
    let mut gated = Vec::new();
    for (i, a) in bs_vs.components.iter().enumerate() {
        for (j, b) in veh_vs.components.iter().enumerate() {
            let d = position_distance(a, b);
            if d < params.location_gate && velocity_distance(a, b) < params.velocity_gate {
                gated.push((i, j, d));
            }
        }
    }
    let (row_match, col_used) = greedy_match(&gated, bs_vs.len(), veh_vs.len());
    let mut union = Vec::new();
    let mut outcome = FusionOutcome {
        fused: GmPhd::new(LandmarkType::Vs),
        matched: 0,
        bs_unmatched: 0,
        vehicle_unmatched: 0,
    };
    for (i, a) in bs_vs.components.iter().enumerate() {
        match row_match[i] {
            Some(j) => {
                let b = &veh_vs.components[j];
                let (wa, wb) = matched_weights(&a.cov, &b.cov);
                let pair = [scaled(a, wa), scaled(b, wb)];
                union.extend(merge_components(pair.iter()));
                outcome.matched += 1;
            }
            None => {
                let beta = if fov.contains(env, &a.position(), LandmarkType::Vs) {
                    params.scatterer_unmatched_in_fov
                } else {
                    1.0
                };
                union.push(scaled(a, beta));
                outcome.bs_unmatched += 1;
            }
        }
    }
    for (j, b) in veh_vs.components.iter().enumerate() {
        if !col_used[j] {
            union.push(b.clone());
            outcome.vehicle_unmatched += 1;
        }
    }
    outcome.fused = prune_merge(
        &GmPhd::with_components(LandmarkType::Vs, union),
        params.prune_threshold,
        params.merge_threshold,
        params.max_components,
    );
    outcome
}

/// Fused maps held at the base station.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedMap {
    pub va: GmPhd,
    pub sp: GmPhd,
    pub vs: GmPhd,
}

impl Default for FusedMap {
    fn default() -> Self {
        Self {
            va: GmPhd::new(LandmarkType::Va),
            sp: GmPhd::new(LandmarkType::Sp),
            vs: GmPhd::new(LandmarkType::Vs),
        }
    }
}

/// What a vehicle sends at a fusion epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Uplink {
    pub vehicle: usize,
    pub step: usize,
    pub va: GmPhd,
    pub sp: GmPhd,
    /// Averaged scatterer map with the ego posterior placed, when the mode
    /// fuses scatterers.
    pub vs: Option<GmPhd>,
    pub fov: AccumulatedFov,
}

/// Component count and mass of one map type before and after a fusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapChange {
    pub kind: LandmarkType,
    pub components_before: usize,
    pub mass_before: f64,
    pub uplink_components: usize,
    pub uplink_mass: f64,
    pub components_after: usize,
    pub mass_after: f64,
}

impl MapChange {
    fn new(kind: LandmarkType, before: &GmPhd, uplink: &GmPhd, after: &GmPhd) -> Self {
        Self {
            kind,
            components_before: before.len(),
            mass_before: before.mass(),
            uplink_components: uplink.len(),
            uplink_mass: uplink.mass(),
            components_after: after.len(),
            mass_after: after.mass(),
        }
    }
}

/// Record of one uplink fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionEvent {
    pub step: usize,
    pub vehicle: usize,
    pub changes: Vec<MapChange>,
}

/// The base station: fused maps and the step its scatterer map refers to.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BaseStation {
    pub map: FusedMap,
    pub vs_step: Option<usize>,
}

impl BaseStation {
    /// Applies one uplink. The scatterer map is first predicted forward to
    /// the uplink's step.
    pub fn fuse(
        &mut self,
        uplink: &Uplink,
        env: &Environment,
        params: &FusionParams,
        dt: f64,
        process_cov: &StateCov,
    ) -> FusionEvent {
        let mut changes = Vec::new();
        let va = fuse_static(&self.map.va, &uplink.va, &uplink.fov, env, params).fused;
        changes.push(MapChange::new(
            LandmarkType::Va,
            &self.map.va,
            &uplink.va,
            &va,
        ));
        let sp = fuse_static(&self.map.sp, &uplink.sp, &uplink.fov, env, params).fused;
        changes.push(MapChange::new(
            LandmarkType::Sp,
            &self.map.sp,
            &uplink.sp,
            &sp,
        ));
        self.map.va = va;
        self.map.sp = sp;

        if let Some(vs) = &uplink.vs {
            let elapsed = self.vs_step.map_or(0, |s| uplink.step.saturating_sub(s));
            let predicted =
                predict_bs_vs(&self.map.vs, elapsed, dt, process_cov, params.survival_prob);
            let fused = fuse_vs(&predicted, vs, &uplink.fov, env, params).fused;
            changes.push(MapChange::new(LandmarkType::Vs, &predicted, vs, &fused));
            self.map.vs = fused;
            self.vs_step = Some(uplink.step);
        }
        FusionEvent {
            step: uplink.step,
            vehicle: uplink.vehicle,
            changes,
        }
    }
}

/// Overwrites every particle's static maps with the fused ones. When
/// `scatterers` is given, the scatterer maps are overwritten too, minus the
/// components that gate with the receiving vehicle's own posterior (a
/// vehicle is not a scatterer for itself).
pub fn downlink(
    filter: &mut LocalFilter,
    fused: &FusedMap,
    scatterers: Option<(&EgoPosterior, f64)>,
) {
    let vs = scatterers.map(|(ego, gate)| {
        GmPhd::with_components(
            LandmarkType::Vs,
            fused
                .vs
                .components
                .iter()
                .filter(|c| !ego.matches(c, gate))
                .cloned()
                .collect(),
        )
    });
    for p in &mut filter.particles {
        p.maps.va = fused.va.clone();
        p.maps.sp = fused.sp.clone();
        if let Some(vs) = &vs {
            p.maps.vs = vs.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::VehicleState;
    use crate::geometry::Plane;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, Vector3};

    fn env() -> Environment {
        Environment {
            bs_position: Vec3::new(0.0, 0.0, 40.0),
            reflecting_surfaces: alloc::vec![Plane::new(Vec3::x(), 100.0).unwrap()],
            sp_positions: Vec::new(),
            fov_range_sp: 50.0,
            fov_range_vs: 50.0,
            detection_prob: 0.95,
            gamma_d: 0.9,
        }
    }

    fn comp(weight: f64, pos: [f64; 3], var: f64) -> GaussianComponent {
        let mut mean = StateVec::zeros();
        mean.fixed_rows_mut::<3>(0).copy_from_slice(&pos);
        GaussianComponent::new(weight, mean, StateCov::identity() * var)
    }

    fn particle(weight: f64, comps: Vec<GaussianComponent>) -> Particle {
        let mut p = Particle::new(
            VehicleState {
                position: Vec3::zeros(),
                heading: 0.0,
                speed: 10.0,
                turn_rate: 0.0,
                clock_bias: 0.0,
            },
            weight,
        );
        p.maps.sp.components = comps;
        p
    }

    #[test]
    fn msm_examples() {
        let a = Vector3::new(1.0, 0.0, 0.0);
        let z = Vector3::zeros();
        let d = msm_distance(&a, &Matrix3::identity(), &z, &(Matrix3::identity() * 4.0)).unwrap();
        assert_eq!(d, 1.0);
        assert_eq!(
            msm_distance(&a, &Matrix3::identity(), &a, &Matrix3::identity()).unwrap(),
            0.0
        );
        assert!(msm_distance(&a, &Matrix3::zeros(), &z, &Matrix3::identity()).is_err());
    }

    #[test]
    fn averaging() {
        let single = average_map(
            &[particle(1.0, alloc::vec![comp(1.0, [0.0; 3], 1.0)])],
            LandmarkType::Sp,
            &FusionParams::default(),
        );
        assert_eq!(single.len(), 1);
        let same = alloc::vec![comp(1.0, [0.0; 3], 1.0), comp(0.7, [30.0, 0.0, 0.0], 1.0)];
        let avg = average_map(
            &[particle(0.5, same.clone()), particle(0.5, same)],
            LandmarkType::Sp,
            &FusionParams::default(),
        );
        assert_relative_eq!(avg.mass(), 1.7, epsilon = 1e-12);
        let split = average_map(
            &[
                particle(0.9, alloc::vec![comp(1.0, [0.0; 3], 1.0)]),
                particle(0.1, alloc::vec![comp(1.0, [50.0, 0.0, 0.0], 1.0)]),
            ],
            LandmarkType::Sp,
            &FusionParams::default(),
        );
        let ws: Vec<f64> = split.components.iter().map(|c| c.weight).collect();
        assert_eq!(ws.len(), 2);
        assert_relative_eq!(ws[0], 0.9);
        assert_relative_eq!(ws[1], 0.1);
        // a hundred equal particles each holding 1/100 of one landmark
        let many: Vec<Particle> = (0..100)
            .map(|_| particle(0.01, alloc::vec![comp(1.0, [5.0, 0.0, 0.0], 1.0)]))
            .collect();
        let pooled = average_map(&many, LandmarkType::Sp, &FusionParams::default());
        assert_eq!(pooled.len(), 1);
        assert_relative_eq!(pooled.mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ego_placement() {
        let ego = EgoPosterior {
            mean: StateVec::from_column_slice(&[10.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.1]),
            cov: StateCov::identity(),
        };
        let empty = place_ego(&GmPhd::new(LandmarkType::Vs), &ego, 20.0);
        assert_eq!(empty.components, alloc::vec![ego.component()]);

        let mut near = comp(0.8, [10.0, 0.0, 0.0], 1.0);
        near.mean[4] = 5.0;
        let far = comp(0.8, [110.0, 0.0, 0.0], 1.0);
        let placed = place_ego(
            &GmPhd::with_components(LandmarkType::Vs, alloc::vec![near, far.clone()]),
            &ego,
            20.0,
        );
        assert_eq!(placed.components, alloc::vec![far, ego.component()]);
        let again = place_ego(&placed, &ego, 20.0);
        assert_eq!(again, placed);
    }

    #[test]
    fn static_fusion_rules() {
        let e = env();
        let params = FusionParams::default();
        let mut fov = AccumulatedFov::new(0.9);
        fov.push(Vec3::new(0.0, 0.0, 0.0));
        let one = GmPhd::with_components(
            LandmarkType::Sp,
            alloc::vec![comp(1.0, [10.0, 0.0, 0.0], 1.0)],
        );
        let out = fuse_static(&one, &one, &fov, &e, &params);
        assert_eq!(out.fused.components, one.components);

        // outside the observed region: kept
        let far = GmPhd::with_components(
            LandmarkType::Sp,
            alloc::vec![comp(1.0, [90.0, 0.0, 0.0], 1.0)],
        );
        let empty = GmPhd::new(LandmarkType::Sp);
        assert_relative_eq!(
            fuse_static(&far, &empty, &fov, &e, &params).fused.mass(),
            1.0
        );

        // inside: halved on each epoch
        let mut planted = one.clone();
        planted = fuse_static(&planted, &empty, &fov, &e, &params).fused;
        assert_relative_eq!(planted.mass(), 0.5);
        planted = fuse_static(&planted, &empty, &fov, &e, &params).fused;
        assert_relative_eq!(planted.mass(), 0.25);
    }

    #[test]
    fn matched_weight_rule() {
        let (a, b) = matched_weights(&StateCov::identity(), &StateCov::identity());
        assert_eq!((a, b), (0.5, 0.5));
        let (a, b) = matched_weights(&StateCov::identity(), &(StateCov::identity() * 3.0));
        assert_relative_eq!(a, 0.75, epsilon = 1e-15);
        assert_relative_eq!(b, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn bs_prediction() {
        let mut c = comp(1.0, [0.0; 3], 1.0);
        c.mean[3] = 5.0;
        let m = GmPhd::with_components(LandmarkType::Vs, alloc::vec![c]);
        let q = StateCov::identity() * 0.1;
        assert_eq!(predict_bs_vs(&m, 0, 0.5, &q, 0.99), m);
        let one = predict_bs_vs(&m, 1, 0.5, &q, 0.99);
        assert_relative_eq!(one.mass(), 0.99);
        let two = predict_bs_vs(&m, 2, 0.5, &q, 0.99);
        assert_relative_eq!(two.components[0].mean[0], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn scatterer_fusion_rules() {
        let e = env();
        let params = FusionParams::default();
        let mut fov = AccumulatedFov::new(0.9);
        fov.push(Vec3::zeros());
        let planted = GmPhd::with_components(
            LandmarkType::Vs,
            alloc::vec![comp(1.0, [10.0, 0.0, 0.0], 1.0)],
        );
        let empty = GmPhd::new(LandmarkType::Vs);
        let out = fuse_vs(&planted, &empty, &fov, &e, &params).fused;
        assert_relative_eq!(out.mass(), 0.25);

        let a = comp(1.0, [10.0, 0.0, 0.0], 1.0);
        let b = comp(1.0, [10.5, 0.0, 0.0], 3.0);
        let out = fuse_vs(
            &GmPhd::with_components(LandmarkType::Vs, alloc::vec![a]),
            &GmPhd::with_components(LandmarkType::Vs, alloc::vec![b]),
            &fov,
            &e,
            &params,
        );
        assert_eq!(out.matched, 1);
        assert_relative_eq!(out.fused.mass(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(out.fused.components[0].mean[0], 10.125, epsilon = 1e-12);
    }

    #[test]
    fn fov_membership() {
        let e = env();
        let mut fov = AccumulatedFov::new(0.9);
        assert!(!fov.contains(&e, &Vec3::new(30.0, 0.0, 0.0), LandmarkType::Sp));
        fov.push(Vec3::zeros());
        assert!(fov.contains(&e, &Vec3::new(30.0, 0.0, 0.0), LandmarkType::Sp));
        assert!(!fov.contains(&e, &Vec3::new(60.0, 0.0, 0.0), LandmarkType::Sp));
        assert!(fov.contains(&e, &Vec3::new(600.0, 0.0, 0.0), LandmarkType::Va));
        let strict = AccumulatedFov {
            positions: alloc::vec![Vec3::zeros()],
            gamma_d: 0.99,
        };
        assert!(!strict.contains(&e, &Vec3::new(1.0, 0.0, 0.0), LandmarkType::Sp));
    }
}
