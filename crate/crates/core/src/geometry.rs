//! Channel-parameter geometry: forward measurement model, its closed-form
//! inverse used for birth, the field-of-view rule and virtual-anchor mirroring.
//!
//! All delays are range-equivalent (meters) and include the receiver clock
//! bias. Arrival angles are expressed in the vehicle frame, which differs from
//! the global frame by a rotation of the heading about the vertical axis.
//! Departure angles are expressed in the global frame at the base station.

use alloc::vec::Vec;

use thiserror::Error;

use crate::dynamics::{Target, VehicleState};
use crate::linalg::{direction_angles, unit_from_angles, wrap_angle, MeasVec, Vec3};

/// Below this length two points are considered coincident.
const COINCIDENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("target coincides with the vehicle or base station")]
    CoincidentPoints,
    #[error("reflection path is parallel to the reflecting surface")]
    ParallelSurface,
    #[error("plane normal must have nonzero length")]
    ZeroNormal,
    #[error("measurement is inconsistent with a {0:?} path")]
    InversionFailed(LandmarkType),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(&'static str),
}

/// Landmark type of a propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LandmarkType {
    /// Base station, line-of-sight path.
    Bs,
    /// Virtual anchor, specular reflection.
    Va,
    /// Static scatter point.
    Sp,
    /// Moving vehicle scatterer.
    Vs,
}

impl LandmarkType {
    pub const ALL: [LandmarkType; 4] = [Self::Bs, Self::Va, Self::Sp, Self::Vs];

    pub fn is_static(self) -> bool {
        !matches!(self, Self::Vs)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Bs => "BS",
            Self::Va => "VA",
            Self::Sp => "SP",
            Self::Vs => "VS",
        }
    }
}

/// Plane `{x : normal · x = offset}` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Vec3,
    offset: f64,
}

impl Plane {
    /// Normalizes `normal`; the offset is interpreted for the normalized plane.
    pub fn new(normal: Vec3, offset: f64) -> Result<Self, GeometryError> {
        let norm = normal.norm();
        if !(norm > COINCIDENCE_TOL) || !norm.is_finite() {
            return Err(GeometryError::ZeroNormal);
        }
        Ok(Self {
            normal: normal / norm,
            offset,
        })
    }

    /// Plane through `point` with the given normal.
    pub fn through(point: &Vec3, normal: Vec3) -> Result<Self, GeometryError> {
        let plane = Self::new(normal, 0.0)?;
        Ok(Self {
            offset: plane.normal.dot(point),
            ..plane
        })
    }

    /// Perpendicular bisector of two points: the surface whose mirror maps
    /// `a` onto `b`.
    pub fn bisector(a: &Vec3, b: &Vec3) -> Result<Self, GeometryError> {
        let n = b - a;
        if n.norm() <= COINCIDENCE_TOL {
            return Err(GeometryError::CoincidentPoints);
        }
        Self::through(&((a + b) * 0.5), n)
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Intersection of the line through `from` and `to` with the plane.
    pub fn intersect_line(&self, from: &Vec3, to: &Vec3) -> Result<Vec3, GeometryError> {
        let dir = to - from;
        let denom = self.normal.dot(&dir);
        if denom.abs() <= COINCIDENCE_TOL * dir.norm().max(1.0) {
            return Err(GeometryError::ParallelSurface);
        }
        let t = -self.signed_distance(from) / denom;
        Ok(from + dir * t)
    }
}

/// Reflects the base station across a surface, giving its virtual anchor.
pub fn mirror_bs(bs: &Vec3, surface: &Plane) -> Vec3 {
    bs - surface.normal * (2.0 * surface.signed_distance(bs))
}

/// Channel parameters of one propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Propagation distance plus clock bias, meters.
    pub toa: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub aod_az: f64,
    pub aod_el: f64,
}

impl Measurement {
    /// Indices of the angular entries of [`Measurement::to_vector`].
    pub const ANGULAR: [bool; 5] = [false, true, true, true, true];

    pub fn to_vector(&self) -> MeasVec {
        MeasVec::new(self.toa, self.aoa_az, self.aoa_el, self.aod_az, self.aod_el)
    }

    /// Builds a measurement, wrapping the angular entries.
    pub fn from_vector(v: &MeasVec) -> Self {
        Self {
            toa: v[0],
            aoa_az: wrap_angle(v[1]),
            aoa_el: wrap_angle(v[2]),
            aod_az: wrap_angle(v[3]),
            aod_el: wrap_angle(v[4]),
        }
    }
}

/// Static radio environment shared by every vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub bs_position: Vec3,
    /// Each surface induces one virtual anchor.
    pub reflecting_surfaces: Vec<Plane>,
    pub sp_positions: Vec<Vec3>,
    pub fov_range_sp: f64,
    pub fov_range_vs: f64,
    pub detection_prob: f64,
    /// Detection threshold used by the accumulated field of view.
    pub gamma_d: f64,
}

impl Environment {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(0.0..=1.0).contains(&self.detection_prob) {
            return Err(GeometryError::InvalidEnvironment(
                "detection probability must lie in [0, 1]",
            ));
        }
        if !(self.fov_range_sp > 0.0 && self.fov_range_vs > 0.0) {
            return Err(GeometryError::InvalidEnvironment(
                "field-of-view ranges must be positive",
            ));
        }
        if !(self.gamma_d > 0.0 && self.gamma_d < 1.0) {
            return Err(GeometryError::InvalidEnvironment(
                "gamma_d must lie in (0, 1)",
            ));
        }
        for s in &self.reflecting_surfaces {
            if (s.normal.norm() - 1.0).abs() > 1e-9 {
                return Err(GeometryError::InvalidEnvironment(
                    "surface normal is not unit length",
                ));
            }
            if s.signed_distance(&self.bs_position).abs() <= COINCIDENCE_TOL {
                return Err(GeometryError::InvalidEnvironment(
                    "base station lies on a surface",
                ));
            }
        }
        Ok(())
    }

    pub fn virtual_anchors(&self) -> Vec<Vec3> {
        self.reflecting_surfaces
            .iter()
            .map(|s| mirror_bs(&self.bs_position, s))
            .collect()
    }

    /// Detection range for range-gated types; `None` means always in view.
    pub fn fov_range(&self, kind: LandmarkType) -> Option<f64> {
        match kind {
            LandmarkType::Bs | LandmarkType::Va => None,
            LandmarkType::Sp => Some(self.fov_range_sp),
            LandmarkType::Vs => Some(self.fov_range_vs),
        }
    }

    pub fn in_fov(&self, vehicle_pos: &Vec3, target_pos: &Vec3, kind: LandmarkType) -> bool {
        match self.fov_range(kind) {
            None => true,
            Some(r) => (target_pos - vehicle_pos).norm() <= r,
        }
    }

    /// Detection probability of a landmark at `target_pos` seen from `vehicle_pos`.
    pub fn detection_prob_at(
        &self,
        vehicle_pos: &Vec3,
        target_pos: &Vec3,
        kind: LandmarkType,
    ) -> f64 {
        if self.in_fov(vehicle_pos, target_pos, kind) {
            self.detection_prob
        } else {
            0.0
        }
    }
}

/// Detection probability of `target` for `vehicle`.
pub fn detection_probability(vehicle: &VehicleState, target: &Target, env: &Environment) -> f64 {
    env.detection_prob_at(&vehicle.position, &target.position(), target.kind)
}

fn arrival_angles(vehicle: &VehicleState, toward: &Vec3) -> (f64, f64) {
    let (az, el) = direction_angles(toward);
    (wrap_angle(az - vehicle.heading), el)
}

/// Noiseless channel parameters of the path through a landmark at `position`.
pub fn measure_position(
    vehicle: &VehicleState,
    position: &Vec3,
    kind: LandmarkType,
    bs: &Vec3,
) -> Result<MeasVec, GeometryError> {
    let veh = &vehicle.position;
    let to_target = position - veh;
    let first_leg = to_target.norm();
    if first_leg <= COINCIDENCE_TOL {
        return Err(GeometryError::CoincidentPoints);
    }
    let (aoa_az, aoa_el) = arrival_angles(vehicle, &to_target);
    let (path, departure) = match kind {
        LandmarkType::Bs => (first_leg, veh - bs),
        LandmarkType::Va => {
            // the generating surface of a virtual anchor is the bisector of
            // the anchor and the base station
            let surface = Plane::bisector(bs, position)?;
            let incidence = surface.intersect_line(position, veh)?;
            (first_leg, incidence - bs)
        }
        LandmarkType::Sp | LandmarkType::Vs => {
            let from_bs = position - bs;
            (first_leg + from_bs.norm(), from_bs)
        }
    };
    if departure.norm() <= COINCIDENCE_TOL {
        return Err(GeometryError::CoincidentPoints);
    }
    let (aod_az, aod_el) = direction_angles(&departure);
    Ok(MeasVec::new(
        path + vehicle.clock_bias,
        aoa_az,
        aoa_el,
        aod_az,
        aod_el,
    ))
}

/// Noiseless measurement of `target` by `vehicle`.
pub fn measure(
    vehicle: &VehicleState,
    target: &Target,
    env: &Environment,
) -> Result<Measurement, GeometryError> {
    measure_position(vehicle, &target.position(), target.kind, &env.bs_position)
        .map(|v| Measurement::from_vector(&v))
}

/// Landmark position that reproduces `z` for a path of type `kind`.
///
/// Uses the delay and the arrival direction only. Direct and reflected paths
/// place the landmark on the arrival ray at the path length; scattered paths
/// solve `|bs - x| + |x - veh| = toa - bias` along the ray in closed form.
pub fn invert_measurement_vector(
    vehicle: &VehicleState,
    z: &MeasVec,
    kind: LandmarkType,
    bs: &Vec3,
) -> Result<Vec3, GeometryError> {
    let path = z[0] - vehicle.clock_bias;
    let ray = unit_from_angles(z[1] + vehicle.heading, z[2]);
    let fail = GeometryError::InversionFailed(kind);
    if !path.is_finite() || path <= COINCIDENCE_TOL {
        return Err(fail);
    }
    match kind {
        LandmarkType::Bs | LandmarkType::Va => Ok(vehicle.position + ray * path),
        LandmarkType::Sp | LandmarkType::Vs => {
            let w = bs - vehicle.position;
            let direct = w.norm();
            if path <= direct {
                return Err(fail);
            }
            let denom = 2.0 * (path - ray.dot(&w));
            let t = (path * path - direct * direct) / denom;
            if !(t > COINCIDENCE_TOL) || t > path || !t.is_finite() {
                return Err(fail);
            }
            Ok(vehicle.position + ray * t)
        }
    }
}

pub fn invert_measurement(
    vehicle: &VehicleState,
    z: &Measurement,
    kind: LandmarkType,
    env: &Environment,
) -> Result<Vec3, GeometryError> {
    invert_measurement_vector(vehicle, &z.to_vector(), kind, &env.bs_position)
}
