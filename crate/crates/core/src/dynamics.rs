//! Motion models.
//!
//! Vehicles follow a coordinated turn in polar form (position, heading,
//! speed, turn rate). Vehicle scatterers are tracked with the Cartesian
//! coordinated-turn model on `[x, v, turn_rate]`. Base station, virtual
//! anchors and scatter points are static.

use core::f64::consts::PI;

use crate::geometry::LandmarkType;
use crate::linalg::{sinc, wrap_angle, MeasCov, StateCov, StateVec, Vec3};

/// Turn rates below this magnitude are treated as straight-line motion.
pub const TURN_RATE_EPS: f64 = 1e-6;

const DERIVATIVE_SERIES_ANGLE: f64 = 1e-2;

/// Ego state of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Vec3,
    /// Heading in `(-pi, pi]`.
    pub heading: f64,
    /// Translational speed, m/s.
    pub speed: f64,
    /// Turn rate, rad/s.
    pub turn_rate: f64,
    /// Receiver clock bias, meters.
    pub clock_bias: f64,
}

impl VehicleState {
    /// Layout `[x, y, z, heading, speed, turn_rate, clock_bias]`.
    pub fn to_vector(&self) -> StateVec {
        StateVec::from_column_slice(&[
            self.position.x,
            self.position.y,
            self.position.z,
            self.heading,
            self.speed,
            self.turn_rate,
            self.clock_bias,
        ])
    }

    pub fn from_vector(v: &StateVec) -> Self {
        Self {
            position: Vec3::new(v[0], v[1], v[2]),
            heading: wrap_angle(v[3]),
            speed: v[4],
            turn_rate: v[5],
            clock_bias: v[6],
        }
    }

    pub fn velocity(&self) -> Vec3 {
        let (s, c) = self.heading.sin_cos();
        Vec3::new(self.speed * c, self.speed * s, 0.0)
    }

    /// This vehicle as seen by another receiver: a moving scatterer.
    pub fn as_scatterer(&self) -> Target {
        Target::moving(self.position, self.velocity(), self.turn_rate)
    }
}

/// Landmark or scatterer with its type tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    /// `[x, y, z, vx, vy, vz, turn_rate]`.
    pub state: StateVec,
    pub kind: LandmarkType,
}

impl Target {
    /// Static landmark; velocity and turn rate are zero.
    pub fn stationary(position: Vec3, kind: LandmarkType) -> Self {
        debug_assert!(kind.is_static());
        let mut state = StateVec::zeros();
        state.fixed_rows_mut::<3>(0).copy_from(&position);
        Self { state, kind }
    }

    pub fn moving(position: Vec3, velocity: Vec3, turn_rate: f64) -> Self {
        let mut state = StateVec::zeros();
        state.fixed_rows_mut::<3>(0).copy_from(&position);
        state.fixed_rows_mut::<3>(3).copy_from(&velocity);
        state[6] = turn_rate;
        Self {
            state,
            kind: LandmarkType::Vs,
        }
    }

    pub fn position(&self) -> Vec3 {
        self.state.fixed_rows::<3>(0).into_owned()
    }

    pub fn velocity(&self) -> Vec3 {
        self.state.fixed_rows::<3>(3).into_owned()
    }

    pub fn turn_rate(&self) -> f64 {
        self.state[6]
    }
}

/// Process, measurement and dithering covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// On the vehicle vector `[x, y, z, heading, speed, turn_rate, clock_bias]`.
    pub vehicle_process_cov: StateCov,
    /// On the scatterer state `[x, v, turn_rate]`.
    pub vs_process_cov: StateCov,
    pub measurement_cov: MeasCov,
    /// Added to every scatterer covariance during prediction.
    pub dither_cov: StateCov,
}

impl NoiseConfig {
    /// Diagonal covariances from per-axis standard deviations (dithering is
    /// given directly as variances).
    pub fn from_std_devs(
        vehicle_std: &[f64; 7],
        vs_std: &[f64; 7],
        measurement_std: &[f64; 5],
        dither_var: &[f64; 7],
    ) -> Self {
        let sq7 = |s: &[f64; 7]| {
            StateCov::from_diagonal(&StateVec::from_iterator(s.iter().map(|x| x * x)))
        };
        Self {
            vehicle_process_cov: sq7(vehicle_std),
            vs_process_cov: sq7(vs_std),
            measurement_cov: MeasCov::from_diagonal(&crate::linalg::MeasVec::from_iterator(
                measurement_std.iter().map(|x| x * x),
            )),
            dither_cov: StateCov::from_diagonal(&StateVec::from_column_slice(dither_var)),
        }
    }
}

/// Coordinated-turn vehicle update with optional additive noise on
/// `[x, y, z, heading, speed, turn_rate, clock_bias]`.
pub fn step_vehicle(s: &VehicleState, dt: f64, noise: Option<&StateVec>) -> VehicleState {
    let half_turn = 0.5 * s.turn_rate * dt;
    let mid_heading = s.heading + half_turn;
    // chord length of the arc; reduces to speed * dt on a straight line
    let chord = s.speed * dt * turn_sinc(half_turn, s.turn_rate);
    let (sin_mid, cos_mid) = mid_heading.sin_cos();
    let mut next = StateVec::from_column_slice(&[
        s.position.x + chord * cos_mid,
        s.position.y + chord * sin_mid,
        s.position.z,
        s.heading + s.turn_rate * dt,
        s.speed,
        s.turn_rate,
        s.clock_bias,
    ]);
    if let Some(q) = noise {
        next += q;
    }
    VehicleState::from_vector(&next)
}

fn turn_sinc(angle: f64, turn_rate: f64) -> f64 {
    if turn_rate.abs() < TURN_RATE_EPS {
        let a2 = angle * angle;
        1.0 - a2 / 6.0
    } else {
        sinc(angle)
    }
}

/// Turn terms of the Cartesian coordinated turn and their derivatives with
/// respect to the turn rate.
struct TurnTerms {
    sin: f64,
    cos: f64,
    /// `sin(w dt) / w`
    s_over_w: f64,
    /// `(1 - cos(w dt)) / w`
    c_over_w: f64,
    d_s_over_w: f64,
    d_c_over_w: f64,
}

impl TurnTerms {
    fn new(w: f64, dt: f64) -> Self {
        let a = w * dt;
        let (sin, cos) = a.sin_cos();
        let half = 0.5 * a;
        let a2 = a * a;
        // the closed-form derivatives cancel catastrophically for small turn
        // angles; their Taylor series are accurate to ~1e-19 below 1e-2
        let (ds, dc) = if a.abs() < DERIVATIVE_SERIES_ANGLE {
            (
                -a / 3.0 + a * a2 / 30.0 - a * a2 * a2 / 840.0,
                0.5 - a2 / 8.0 + a2 * a2 / 144.0 - a2 * a2 * a2 / 5760.0,
            )
        } else {
            ((a * cos - sin) / a2, (a * sin - (1.0 - cos)) / a2)
        };
        Self {
            sin,
            cos,
            s_over_w: dt * sinc(a),
            c_over_w: dt * half.sin() * sinc(half),
            d_s_over_w: dt * dt * ds,
            d_c_over_w: dt * dt * dc,
        }
    }
}

/// Noiseless Cartesian coordinated turn of a scatterer state.
pub fn step_vs_state(x: &StateVec, dt: f64) -> StateVec {
    let (vx, vy, vz, w) = (x[3], x[4], x[5], x[6]);
    let t = TurnTerms::new(w, dt);
    StateVec::from_column_slice(&[
        x[0] + vx * t.s_over_w - vy * t.c_over_w,
        x[1] + vx * t.c_over_w + vy * t.s_over_w,
        x[2] + vz * dt,
        vx * t.cos - vy * t.sin,
        vx * t.sin + vy * t.cos,
        vz,
        w,
    ])
}

/// Transition of a target. Static types are left unchanged; scatterers
/// follow the coordinated turn plus optional additive noise.
pub fn step_target(t: &Target, dt: f64, noise: Option<&StateVec>) -> Target {
    if t.kind.is_static() {
        return *t;
    }
    let mut state = step_vs_state(&t.state, dt);
    if let Some(q) = noise {
        state += q;
    }
    Target {
        state,
        kind: t.kind,
    }
}

/// Jacobian of [`step_target`] with respect to the target state.
pub fn transition_jacobian_vs(t: &Target, dt: f64) -> StateCov {
    if t.kind.is_static() {
        return StateCov::identity();
    }
    state_jacobian_vs(&t.state, dt)
}

pub fn state_jacobian_vs(x: &StateVec, dt: f64) -> StateCov {
    let (vx, vy) = (x[3], x[4]);
    let t = TurnTerms::new(x[6], dt);
    let mut j = StateCov::identity();
    j[(0, 3)] = t.s_over_w;
    j[(0, 4)] = -t.c_over_w;
    j[(0, 6)] = vx * t.d_s_over_w - vy * t.d_c_over_w;
    j[(1, 3)] = t.c_over_w;
    j[(1, 4)] = t.s_over_w;
    j[(1, 6)] = vx * t.d_c_over_w + vy * t.d_s_over_w;
    j[(2, 5)] = dt;
    j[(3, 3)] = t.cos;
    j[(3, 4)] = -t.sin;
    j[(3, 6)] = -dt * (vx * t.sin + vy * t.cos);
    j[(4, 3)] = t.sin;
    j[(4, 4)] = t.cos;
    j[(4, 6)] = dt * (vx * t.cos - vy * t.sin);
    j
}

/// Period of one full revolution at the given turn rate.
pub fn turn_period(turn_rate: f64) -> f64 {
    2.0 * PI / turn_rate.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn vehicle(x: f64, heading: f64, speed: f64, turn_rate: f64) -> VehicleState {
        VehicleState {
            position: Vec3::new(x, 0.0, 0.0),
            heading,
            speed,
            turn_rate,
            clock_bias: 300.0,
        }
    }

    #[test]
    fn straight_line_step() {
        let s = vehicle(0.0, 0.0, 1.0, 0.0);
        let n = step_vehicle(&s, 1.0, None);
        assert_relative_eq!(n.position, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_eq!(n.heading, 0.0);
    }

    #[test]
    fn vehicle_stays_on_circle() {
        let mut s = vehicle(70.73, FRAC_PI_2, 22.22, PI / 10.0);
        let radius = 22.22 / (PI / 10.0);
        let center = Vec3::new(70.73 - radius, 0.0, 0.0);
        for _ in 0..40 {
            s = step_vehicle(&s, 0.5, None);
            assert!(((s.position - center).norm() - radius).abs() < 1e-6);
        }
    }

    #[test]
    fn full_revolution_returns() {
        let s0 = vehicle(70.73, FRAC_PI_2, 22.22, PI / 10.0);
        let mut s = s0;
        for _ in 0..40 {
            s = step_vehicle(&s, 0.5, None);
        }
        assert!((s.position - s0.position).norm() < 1e-6);
        assert!(wrap_angle(s.heading - s0.heading).abs() < 1e-9);
        assert_relative_eq!(turn_period(PI / 10.0), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn vehicle_noise_is_additive() {
        let s = vehicle(0.0, 0.0, 1.0, 0.0);
        let q = StateVec::from_column_slice(&[0.1, -0.2, 0.0, 0.01, 0.0, 0.0, 0.5]);
        let n = step_vehicle(&s, 1.0, Some(&q));
        assert_relative_eq!(n.position, Vec3::new(1.1, -0.2, 0.0), epsilon = 1e-15);
        assert_relative_eq!(n.heading, 0.01);
        assert_relative_eq!(n.clock_bias, 300.5);
    }

    #[test]
    fn static_targets_do_not_move() {
        let t = Target::stationary(Vec3::new(55.0, -55.0, 12.0), LandmarkType::Sp);
        assert_eq!(step_target(&t, 3.7, None), t);
        assert_eq!(transition_jacobian_vs(&t, 0.5), StateCov::identity());
    }

    #[test]
    fn constant_velocity_limit() {
        let t = Target::moving(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), 0.0);
        let n = step_target(&t, 2.0, None);
        assert_relative_eq!(n.position(), Vec3::new(2.0, 0.0, 0.0));
        assert_relative_eq!(n.velocity(), Vec3::new(1.0, 0.0, 0.0));
        let j = transition_jacobian_vs(&t, 2.0);
        assert_eq!(j[(0, 3)], 2.0);
        assert_eq!(j[(1, 4)], 2.0);
        assert_eq!(j[(2, 5)], 2.0);
        assert_eq!(j[(0, 4)], 0.0);
    }

    #[test]
    fn quarter_turn_closed_form() {
        let t = Target::moving(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), FRAC_PI_2);
        let n = step_target(&t, 1.0, None);
        assert_relative_eq!(n.velocity(), Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
        let expected = Vec3::new(2.0 / PI, 2.0 / PI, 0.0);
        assert_relative_eq!(n.position(), expected, epsilon = 1e-15);

        // fine-step Euler integration of the same turn
        let steps = 200_000;
        let h = 1.0 / steps as f64;
        let (mut p, mut v) = (Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0));
        for _ in 0..steps {
            let a = Vec3::new(-FRAC_PI_2 * v.y, FRAC_PI_2 * v.x, 0.0);
            let v_mid = v + a * (0.5 * h);
            p += v_mid * h;
            let a_mid = Vec3::new(-FRAC_PI_2 * v_mid.y, FRAC_PI_2 * v_mid.x, 0.0);
            v += a_mid * h;
        }
        assert!((p - expected).norm() < 1e-6);
    }

    #[test]
    fn turn_branch_is_continuous() {
        let base = Target::moving(Vec3::new(3.0, -2.0, 1.0), Vec3::new(7.0, -4.0, 0.5), 0.0);
        let dt = 0.5;
        for switch in [TURN_RATE_EPS, 1e-4 / dt, DERIVATIVE_SERIES_ANGLE / dt] {
            let mut lo = base;
            lo.state[6] = switch * (1.0 - 1e-9);
            let mut hi = base;
            hi.state[6] = switch * (1.0 + 1e-9);
            let a = step_target(&lo, dt, None).state;
            let b = step_target(&hi, dt, None).state;
            assert!((a - b).norm() / a.norm() < 1e-9);
            let ja = transition_jacobian_vs(&lo, dt);
            let jb = transition_jacobian_vs(&hi, dt);
            assert!(
                (ja - jb).norm() / ja.norm() < 1e-9,
                "jacobian jump at {switch}"
            );
        }

        let v = vehicle(5.0, 0.7, 12.0, 0.0);
        let mut vl = v;
        vl.turn_rate = TURN_RATE_EPS * (1.0 - 1e-9);
        let mut vh = v;
        vh.turn_rate = TURN_RATE_EPS * (1.0 + 1e-9);
        let pl = step_vehicle(&vl, 0.5, None).position;
        let ph = step_vehicle(&vh, 0.5, None).position;
        assert!((pl - ph).norm() / pl.norm() < 1e-9);
    }

    #[test]
    fn scatterer_view_of_vehicle() {
        let s = VehicleState {
            position: Vec3::new(60.73, 0.0, 0.0),
            heading: FRAC_PI_2,
            speed: 19.08,
            turn_rate: PI / 10.0,
            clock_bias: 300.0,
        };
        let t = s.as_scatterer();
        assert_eq!(t.kind, LandmarkType::Vs);
        assert_relative_eq!(t.velocity(), Vec3::new(0.0, 19.08, 0.0), epsilon = 1e-12);
        assert_eq!(t.turn_rate(), PI / 10.0);
    }
}
