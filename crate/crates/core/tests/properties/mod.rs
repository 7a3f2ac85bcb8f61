//! Randomized property checks of the numerical core.
//!
//! Each check drives its own proptest runner and reports the first
//! shrunk counterexample, so the same suite can back both `#[test]` functions
//! and a timed acceptance run.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use mmslam_core::dynamics::{state_jacobian_vs, step_target, step_vehicle};
use mmslam_core::fusion::{matched_weights, msm_distance};
use mmslam_core::geometry::{invert_measurement_vector, measure_position, mirror_bs};
use mmslam_core::gmphd::{cubature_predict, merge_components, prune_merge};
use mmslam_core::linalg::{MeasCov, MeasVec, SMatrix, StateCov, StateVec, Vec3};
use mmslam_core::metrics::{gospa, GospaParams};
use mmslam_core::{GaussianComponent, GmPhd, LandmarkType, Plane, Target, VehicleState};

pub type Check = fn() -> Result<(), String>;

/// Every check with its name, in report order.
pub const ALL: [(&str, Check); 11] = [
    ("reflection involution", reflection_involution),
    ("measurement round trip", measurement_round_trip),
    ("turn radius invariance", turn_radius_invariance),
    ("scatterer speed invariance", scatterer_speed_invariance),
    (
        "jacobian vs finite differences",
        jacobian_matches_finite_differences,
    ),
    ("cubature linear exactness", cubature_linear_exactness),
    ("prune/merge mass bookkeeping", prune_merge_mass_bookkeeping),
    ("merge moment matching", merge_matches_moments),
    ("gospa vs brute force", gospa_matches_brute_force),
    ("fusion weight normalization", fusion_weights_normalize),
    ("msm symmetry", msm_symmetry),
];

fn run<S, F>(strategy: S, test: F) -> Result<(), String>
where
    S: Strategy,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let config = Config {
        cases: 256,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new(config)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
    (lo..hi, lo..hi, lo..hi).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn direction() -> impl Strategy<Value = Vec3> {
    vec3(-1.0, 1.0).prop_filter("well-conditioned normal", |n| n.norm() > 0.1)
}

fn vehicle() -> impl Strategy<Value = VehicleState> {
    (-100.0..100.0, -100.0..100.0, -3.1..3.1, 0.0..500.0).prop_map(|(x, y, heading, clock_bias)| {
        VehicleState {
            position: Vec3::new(x, y, 0.0),
            heading,
            speed: 5.0,
            turn_rate: 0.1,
            clock_bias,
        }
    })
}

/// Symmetric positive definite matrix `A Aᵀ + floor·I`.
fn spd<const N: usize>(floor: f64) -> impl Strategy<Value = SMatrix<f64, N, N>> {
    prop::collection::vec(-1.0..1.0, N * N).prop_map(move |v| {
        let a = SMatrix::<f64, N, N>::from_column_slice(&v);
        a * a.transpose() + SMatrix::<f64, N, N>::identity() * floor
    })
}

pub fn reflection_involution() -> Result<(), String> {
    run(
        (direction(), -100.0..100.0, vec3(-200.0, 200.0)),
        |(n, offset, p)| {
            let plane = Plane::new(n, offset).unwrap();
            let back = mirror_bs(&mirror_bs(&p, &plane), &plane);
            prop_assert!(
                (back - p).norm() < 1e-12 * (1.0 + p.norm() + offset.abs()),
                "{back} vs {p}"
            );
            Ok(())
        },
    )
}

pub fn measurement_round_trip() -> Result<(), String> {
    let kinds = prop::sample::select(LandmarkType::ALL.to_vec());
    let geometry = (
        vehicle(),
        vec3(-50.0, 50.0),
        vec3(-150.0, 150.0),
        direction(),
        -100.0..100.0,
    );
    run((kinds, geometry), |(kind, (veh, bs, point, n, offset))| {
        let target = match kind {
            LandmarkType::Bs => bs,
            LandmarkType::Va => mirror_bs(&bs, &Plane::new(n, offset).unwrap()),
            LandmarkType::Sp | LandmarkType::Vs => point,
        };
        let Ok(z) = measure_position(&veh, &target, kind, &bs) else {
            return Err(TestCaseError::reject("degenerate geometry"));
        };
        let x = invert_measurement_vector(&veh, &z, kind, &bs)
            .map_err(|e| TestCaseError::fail(format!("{kind:?}: {e}")))?;
        prop_assert!((x - target).norm() < 1e-6, "{kind:?}: {x} vs {target}");
        Ok(())
    })
}

pub fn turn_radius_invariance() -> Result<(), String> {
    let rate = prop_oneof![-1.0..-0.01, 0.01..1.0];
    run(
        (0.1..20.0, rate, -3.1..3.1, 0.05..1.0, 1usize..100),
        |(speed, turn_rate, heading, dt, steps)| {
            let mut s = VehicleState {
                position: Vec3::new(10.0, -5.0, 0.0),
                heading,
                speed,
                turn_rate,
                clock_bias: 0.0,
            };
            let radius = speed / turn_rate;
            let center = s.position + Vec3::new(-heading.sin(), heading.cos(), 0.0) * radius;
            for _ in 0..steps {
                s = step_vehicle(&s, dt, None);
                let r = (s.position - center).norm();
                prop_assert!(
                    (r - radius.abs()).abs() < 1e-9 * radius.abs().max(1.0),
                    "{r} vs {radius}"
                );
            }
            Ok(())
        },
    )
}

pub fn scatterer_speed_invariance() -> Result<(), String> {
    run(
        (
            vec3(-100.0, 100.0),
            vec3(-20.0, 20.0),
            -1.0..1.0,
            0.05..1.0,
            1usize..100,
        ),
        |(p, v, w, dt, steps)| {
            let speed = v.xy().norm();
            let mut t = Target::moving(p, v, w);
            for _ in 0..steps {
                t = step_target(&t, dt, None);
                let s = t.velocity().xy().norm();
                prop_assert!((s - speed).abs() < 1e-12 * speed.max(1.0), "{s} vs {speed}");
            }
            Ok(())
        },
    )
}

pub fn jacobian_matches_finite_differences() -> Result<(), String> {
    let rate = prop_oneof![Just(0.0), -1e-3..1e-3, -1.0..1.0];
    run(
        (vec3(-100.0, 100.0), vec3(-20.0, 20.0), rate, 0.05..1.0),
        |(p, v, w, dt)| {
            let x = StateVec::from_column_slice(&[p.x, p.y, p.z, v.x, v.y, v.z, w]);
            let jac = state_jacobian_vs(&x, dt);
            let target = |x: StateVec| {
                step_target(
                    &Target {
                        state: x,
                        kind: LandmarkType::Vs,
                    },
                    dt,
                    None,
                )
                .state
            };
            let mut fd = StateCov::zeros();
            for j in 0..7 {
                let h = 1e-6 * x[j].abs().max(1.0);
                let mut up = x;
                let mut down = x;
                up[j] += h;
                down[j] -= h;
                fd.set_column(j, &((target(up) - target(down)) / (2.0 * h)));
            }
            let err = (jac - fd).amax() / jac.amax().max(1.0);
            prop_assert!(err < 1e-5, "relative error {err}");
            Ok(())
        },
    )
}

pub fn cubature_linear_exactness() -> Result<(), String> {
    let h = prop::collection::vec(-1.0..1.0, 35)
        .prop_map(|v| SMatrix::<f64, 5, 7>::from_column_slice(&v));
    let r = prop::collection::vec(0.1..2.0, 5)
        .prop_map(|d| MeasCov::from_diagonal(&MeasVec::from_column_slice(&d)));
    let mean = prop::collection::vec(-10.0..10.0, 7).prop_map(|v| StateVec::from_column_slice(&v));
    let z = prop::collection::vec(-10.0..10.0, 5).prop_map(|v| MeasVec::from_column_slice(&v));
    run((h, r, mean, spd::<7>(0.1), z), |(h, r, mean, cov, z)| {
        let comp = GaussianComponent::new(1.0, mean, cov);
        let pred = cubature_predict(&comp, |x| Some(h * x), &r, &[false; 5])
            .map_err(|e| TestCaseError::fail(format!("{e}")))?;
        let s = h * cov * h.transpose() + r;
        let gain = cov * h.transpose() * s.try_inverse().unwrap();
        let post = pred.update(&comp, &z);
        let tol = 1e-9;
        prop_assert!((pred.predicted - h * mean).amax() < tol * (h * mean).amax().max(1.0));
        prop_assert!((pred.innovation_cov - s).amax() < tol * s.amax());
        let mean_kf = mean + gain * (z - h * mean);
        prop_assert!((post.mean - mean_kf).amax() < tol * mean_kf.amax().max(1.0));
        let cov_kf = cov - gain * s * gain.transpose();
        prop_assert!((post.cov - cov_kf).amax() < tol * cov.amax());
        Ok(())
    })
}

/// Weights on a 2^-10 grid, so every partial sum is exact in any order.
fn dyadic_components(n: usize) -> impl Strategy<Value = Vec<GaussianComponent>> {
    let comp = (0u32..=2048, vec3(-5.0, 5.0), 0.5..4.0).prop_map(|(k, p, var)| {
        let mean = StateVec::from_column_slice(&[p.x, p.y, p.z, 0.0, 0.0, 0.0, 0.0]);
        GaussianComponent::new(f64::from(k) / 1024.0, mean, StateCov::identity() * var)
    });
    prop::collection::vec(comp, 0..n)
}

pub fn prune_merge_mass_bookkeeping() -> Result<(), String> {
    run(
        (dyadic_components(30), 0u32..256, 0.0..10.0, 1usize..40),
        |(comps, k, merge_threshold, max_components)| {
            let prune = f64::from(k) / 1024.0;
            let phd = GmPhd::with_components(LandmarkType::Sp, comps);
            let pre = phd.mass();
            let pruned: f64 = phd
                .components
                .iter()
                .filter(|c| !(c.weight >= prune && c.weight > 0.0))
                .map(|c| c.weight)
                .sum();
            let merged = prune_merge(&phd, prune, merge_threshold, usize::MAX);
            prop_assert_eq!(merged.mass(), pre - pruned);
            let kept = prune_merge(&phd, prune, merge_threshold, max_components);
            let truncated: f64 = merged
                .components
                .iter()
                .skip(max_components)
                .map(|c| c.weight)
                .sum();
            prop_assert_eq!(kept.mass(), pre - pruned - truncated);
            prop_assert!(kept.len() <= max_components);
            Ok(())
        },
    )
}

pub fn merge_matches_moments() -> Result<(), String> {
    let comp = (
        0.01..2.0,
        prop::collection::vec(-10.0..10.0, 7),
        spd::<7>(0.01),
    )
        .prop_map(|(w, m, cov)| GaussianComponent::new(w, StateVec::from_column_slice(&m), cov));
    run(prop::collection::vec(comp, 1..8), |group| {
        let merged = merge_components(group.iter()).unwrap();
        let total: f64 = group.iter().map(|c| c.weight).sum();
        let first = group
            .iter()
            .fold(StateVec::zeros(), |acc, c| acc + c.mean * c.weight);
        let second = group.iter().fold(StateCov::zeros(), |acc, c| {
            acc + (c.cov + c.mean * c.mean.transpose()) * c.weight
        });
        let m = &merged.mean;
        prop_assert!((merged.weight - total).abs() < 1e-12 * total);
        prop_assert!((m * total - first).amax() < 1e-10 * first.amax().max(1.0));
        let merged_second = (merged.cov + m * m.transpose()) * total;
        prop_assert!((merged_second - second).amax() < 1e-10 * second.amax());
        Ok(())
    })
}

/// GOSPA (alpha = 2) by enumerating every partial assignment: assigned pairs
/// cost `d^p`, each unassigned point costs `c^p / 2`.
fn gospa_oracle(x: &[Vec3], y: &[Vec3], c: f64, p: f64) -> f64 {
    fn best(x: &[Vec3], y: &[Vec3], used: &mut Vec<bool>, c: f64, p: f64) -> f64 {
        let Some((first, rest)) = x.split_first() else {
            return used.iter().filter(|u| !**u).count() as f64 * c.powf(p) / 2.0;
        };
        let mut out = c.powf(p) / 2.0 + best(rest, y, used, c, p);
        for j in 0..y.len() {
            if !used[j] {
                used[j] = true;
                out = out.min((first - y[j]).norm().powf(p) + best(rest, y, used, c, p));
                used[j] = false;
            }
        }
        out
    }
    best(x, y, &mut vec![false; y.len()], c, p).powf(1.0 / p)
}

pub fn gospa_matches_brute_force() -> Result<(), String> {
    let set = || prop::collection::vec(vec3(-30.0, 30.0), 0..=4);
    run(
        (set(), set(), set(), 1.0..30.0, 1.0..3.0),
        |(x, y, z, cutoff, order)| {
            let params = GospaParams {
                cutoff,
                order,
                alpha: 2.0,
            };
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
            let xy = gospa(&x, &y, &params);
            let oracle = gospa_oracle(&x, &y, cutoff, order);
            prop_assert!(
                close(xy.distance, oracle),
                "{} vs oracle {oracle}",
                xy.distance
            );
            let parts =
                xy.localization.powf(order) + xy.missed.powf(order) + xy.false_targets.powf(order);
            prop_assert!(close(xy.distance.powf(order), parts));
            let yx = gospa(&y, &x, &params);
            prop_assert!(close(xy.distance, yx.distance));
            let xz = gospa(&x, &z, &params).distance;
            let yz = gospa(&y, &z, &params).distance;
            prop_assert!(xz <= xy.distance + yz + 1e-9);
            Ok(())
        },
    )
}

pub fn fusion_weights_normalize() -> Result<(), String> {
    let cov = prop::collection::vec(1e-6..1e6, 7)
        .prop_map(|d| StateCov::from_diagonal(&StateVec::from_column_slice(&d)));
    run((cov.clone(), cov), |(a, b)| {
        let (wa, wb) = matched_weights(&a, &b);
        prop_assert_eq!(wa + wb, 1.0);
        prop_assert!((0.0..=1.0).contains(&wa) && (0.0..=1.0).contains(&wb));
        Ok(())
    })
}

pub fn msm_symmetry() -> Result<(), String> {
    run(
        (
            vec3(-50.0, 50.0),
            spd::<3>(0.01),
            vec3(-50.0, 50.0),
            spd::<3>(0.01),
        ),
        |(ma, pa, mb, pb)| {
            let ab = msm_distance(&ma, &pa, &mb, &pb).unwrap();
            let ba = msm_distance(&mb, &pb, &ma, &pa).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(msm_distance(&ma, &pa, &ma, &pb).unwrap(), 0.0);
            prop_assert!(ma == mb || ab > 0.0);
            Ok(())
        },
    )
}
