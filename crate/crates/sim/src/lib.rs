//! Scenario simulation, Monte Carlo driver and result files for
//! `mmslam-core`.

pub mod config;
pub mod experiment;
pub mod output;
pub mod scenario;
