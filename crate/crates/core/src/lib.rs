//! Multiple-model PHD-SLAM kernels for cooperative mmWave vehicle positioning
//! with moving vehicle scatterers.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! core: the channel-parameter geometry, motion models, Gaussian-mixture PHD
//! machinery, the per-vehicle Rao-Blackwellized particle filter, base-station
//! map fusion and the evaluation metrics. Scenario generation, configuration
//! files and the command-line front end live in the `mmslam-sim` crate.

#![no_std]
// `!(x > t)` is used on purpose so that NaN fails the test
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dynamics;
pub mod fusion;
pub mod geometry;
pub mod gmphd;
pub mod linalg;
pub mod local_slam;
pub mod metrics;

pub use dynamics::{NoiseConfig, Target, VehicleState};
pub use geometry::{Environment, LandmarkType, Measurement, Plane};
pub use gmphd::{GaussianComponent, GmPhd};
