//! Scenario and run configuration, read from TOML.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use mmslam_core::dynamics::NoiseConfig;
use mmslam_core::fusion::FusionParams;
use mmslam_core::linalg::{StateCov, StateVec, Vec3};
use mmslam_core::local_slam::{ClutterModel, Mode, ParticleLikelihood, ScattererBirth, SlamParams};
use mmslam_core::metrics::GospaParams;
use mmslam_core::{Plane, VehicleState};

/// The shipped default configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{}invalid `{key}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        key: String,
        line: Option<usize>,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Baseline,
    Cm1,
    Full,
}

impl From<ModeName> for Mode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Baseline => Mode::Baseline,
            ModeName::Cm1 => Mode::Cm1,
            ModeName::Full => Mode::Full,
        }
    }
}

impl From<Mode> for ModeName {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Baseline => ModeName::Baseline,
            Mode::Cm1 => ModeName::Cm1,
            Mode::Full => ModeName::Full,
        }
    }
}

impl fmt::Display for ModeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(Mode::from(*self).name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LikelihoodName {
    Sum,
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub mode: ModeName,
    pub runs: usize,
    pub particles: usize,
    pub scenario: ScenarioConfig,
    pub noise: NoiseSection,
    pub clutter: ClutterSection,
    pub filter: FilterSection,
    pub fusion: FusionSection,
    pub gospa: GospaSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dt: f64,
    pub steps: usize,
    pub bs_position: [f64; 3],
    /// Horizontal positions of the scatter points; heights are drawn per run.
    pub sp_xy: Vec<[f64; 2]>,
    pub sp_height_range: [f64; 2],
    pub fov_range_sp: f64,
    pub fov_range_vs: f64,
    pub detection_prob: f64,
    pub gamma_d: f64,
    pub surfaces: Vec<SurfaceConfig>,
    pub vehicles: Vec<VehicleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub normal: [f64; 3],
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    /// `[x, y, z, heading, speed, turn_rate, clock_bias]`.
    pub initial: [f64; 7],
    /// Diagonal of the initial particle covariance.
    pub prior_var: [f64; 7],
    pub fusion_start: usize,
    pub fusion_period: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub vehicle_process_std: [f64; 7],
    pub scatterer_process_std: [f64; 7],
    pub measurement_std: [f64; 5],
    pub dither_var: [f64; 7],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterSection {
    pub poisson_mean: f64,
    pub max_toa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub survival_prob: f64,
    pub birth_weight: f64,
    pub prune_threshold: f64,
    pub merge_threshold: f64,
    pub max_components: usize,
    pub extract_va: f64,
    pub extract_sp: f64,
    pub extract_vs: f64,
    pub association_gate: f64,
    /// Omit to evaluate every component against every measurement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likelihood_gate: Option<f64>,
    pub likelihood: LikelihoodName,
    pub resample_ratio: f64,
    pub birth_velocity_var: [f64; 3],
    pub birth_turn_rate_std: f64,
    pub birth_turn_rate_max: f64,
    pub max_scatterer_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionSection {
    pub prune_threshold: f64,
    pub merge_threshold: f64,
    pub average_merge_threshold: f64,
    pub max_components: usize,
    pub location_gate: f64,
    pub velocity_gate: f64,
    pub static_unmatched_in_fov: f64,
    pub scatterer_unmatched_in_fov: f64,
    pub ego_cov_floor: [f64; 7],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GospaSection {
    pub cutoff: f64,
    pub order: f64,
    pub alpha: f64,
}

impl Config {
    pub fn default_config() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("shipped default config is valid")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Parses and validates. Errors carry the line of the offending key when
    /// it can be located.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(text, s.start));
            let message = e.message().trim().to_string();
            match line {
                Some(l) => ConfigError::Parse(format!("line {l}: {message}")),
                None => ConfigError::Parse(message),
            }
        })?;
        config.validate().map_err(|e| match e {
            ConfigError::Invalid { key, message, .. } => ConfigError::Invalid {
                line: line_of_key(text, &key),
                key,
                message,
            },
            other => other,
        })?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        check(self.runs >= 1, "runs", "must be at least 1")?;
        check(self.particles >= 1, "particles", "must be at least 1")?;
        check(s.dt > 0.0, "scenario.dt", "must be positive")?;
        check(s.steps >= 1, "scenario.steps", "must be at least 1")?;
        check(
            s.sp_height_range[0] <= s.sp_height_range[1],
            "scenario.sp_height_range",
            "lower bound exceeds upper bound",
        )?;
        check(
            s.fov_range_sp > 0.0,
            "scenario.fov_range_sp",
            "must be positive",
        )?;
        check(
            s.fov_range_vs > 0.0,
            "scenario.fov_range_vs",
            "must be positive",
        )?;
        check(
            unit(s.detection_prob),
            "scenario.detection_prob",
            "must lie in [0, 1]",
        )?;
        check(
            s.gamma_d > 0.0 && s.gamma_d < 1.0,
            "scenario.gamma_d",
            "must lie in (0, 1)",
        )?;
        check(
            !s.vehicles.is_empty(),
            "scenario.vehicles",
            "at least one vehicle is required",
        )?;
        for v in &s.vehicles {
            check(
                v.initial[4] >= 0.0,
                "scenario.vehicles.initial",
                "speed must be nonnegative",
            )?;
            check(
                v.prior_var.iter().all(|x| *x >= 0.0),
                "scenario.vehicles.prior_var",
                "variances must be nonnegative",
            )?;
            check(
                v.fusion_period >= 1,
                "scenario.vehicles.fusion_period",
                "must be at least 1",
            )?;
            check(
                v.fusion_start >= 1 && v.fusion_start <= s.steps,
                "scenario.vehicles.fusion_start",
                "must lie within the horizon",
            )?;
        }
        for surface in &s.surfaces {
            check(
                Plane::new(Vec3::from(surface.normal), surface.offset).is_ok(),
                "scenario.surfaces.normal",
                "surface normal must be nonzero",
            )?;
        }
        let n = &self.noise;
        check(
            nonneg(&n.vehicle_process_std),
            "noise.vehicle_process_std",
            "must be nonnegative",
        )?;
        check(
            nonneg(&n.scatterer_process_std),
            "noise.scatterer_process_std",
            "must be nonnegative",
        )?;
        check(
            n.measurement_std.iter().all(|x| *x > 0.0),
            "noise.measurement_std",
            "must be positive",
        )?;
        check(
            nonneg(&n.dither_var),
            "noise.dither_var",
            "must be nonnegative",
        )?;
        check(
            self.clutter.poisson_mean >= 0.0,
            "clutter.poisson_mean",
            "must be nonnegative",
        )?;
        check(
            self.clutter.max_toa > 0.0,
            "clutter.max_toa",
            "must be positive",
        )?;
        let f = &self.filter;
        check(
            unit(f.survival_prob),
            "filter.survival_prob",
            "must lie in [0, 1]",
        )?;
        check(
            f.birth_weight > 0.0,
            "filter.birth_weight",
            "must be positive",
        )?;
        check(
            f.prune_threshold >= 0.0,
            "filter.prune_threshold",
            "must be nonnegative",
        )?;
        check(
            f.merge_threshold >= 0.0,
            "filter.merge_threshold",
            "must be nonnegative",
        )?;
        check(
            f.max_components >= 1,
            "filter.max_components",
            "must be at least 1",
        )?;
        check(
            f.association_gate > 0.0,
            "filter.association_gate",
            "must be positive",
        )?;
        check(
            f.likelihood_gate.is_none_or(|g| g > 0.0),
            "filter.likelihood_gate",
            "must be positive",
        )?;
        check(
            unit(f.resample_ratio),
            "filter.resample_ratio",
            "must lie in [0, 1]",
        )?;
        check(
            nonneg(&f.birth_velocity_var),
            "filter.birth_velocity_var",
            "must be nonnegative",
        )?;
        check(
            f.birth_turn_rate_max > 0.0,
            "filter.birth_turn_rate_max",
            "must be positive",
        )?;
        check(
            f.max_scatterer_speed >= 0.0,
            "filter.max_scatterer_speed",
            "must be nonnegative",
        )?;
        let u = &self.fusion;
        check(
            u.prune_threshold >= 0.0,
            "fusion.prune_threshold",
            "must be nonnegative",
        )?;
        check(
            u.merge_threshold >= 0.0,
            "fusion.merge_threshold",
            "must be nonnegative",
        )?;
        check(
            u.average_merge_threshold >= 0.0,
            "fusion.average_merge_threshold",
            "must be nonnegative",
        )?;
        check(
            u.location_gate > 0.0,
            "fusion.location_gate",
            "must be positive",
        )?;
        check(
            u.velocity_gate > 0.0,
            "fusion.velocity_gate",
            "must be positive",
        )?;
        check(
            unit(u.static_unmatched_in_fov),
            "fusion.static_unmatched_in_fov",
            "must lie in [0, 1]",
        )?;
        check(
            unit(u.scatterer_unmatched_in_fov),
            "fusion.scatterer_unmatched_in_fov",
            "must lie in [0, 1]",
        )?;
        check(
            nonneg(&u.ego_cov_floor),
            "fusion.ego_cov_floor",
            "must be nonnegative",
        )?;
        check(
            self.gospa_params().validate().is_ok(),
            "gospa.cutoff",
            "GOSPA needs cutoff > 0, order >= 1 and alpha in (0, 2]",
        )?;
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.mode.into()
    }

    pub fn initial_states(&self) -> Vec<VehicleState> {
        self.scenario
            .vehicles
            .iter()
            .map(|v| VehicleState::from_vector(&StateVec::from_column_slice(&v.initial)))
            .collect()
    }

    pub fn surfaces(&self) -> Vec<Plane> {
        self.scenario
            .surfaces
            .iter()
            .map(|s| Plane::new(Vec3::from(s.normal), s.offset).expect("validated"))
            .collect()
    }

    pub fn noise_config(&self) -> NoiseConfig {
        NoiseConfig::from_std_devs(
            &self.noise.vehicle_process_std,
            &self.noise.scatterer_process_std,
            &self.noise.measurement_std,
            &self.noise.dither_var,
        )
    }

    pub fn clutter_model(&self) -> ClutterModel {
        ClutterModel {
            poisson_mean: self.clutter.poisson_mean,
            max_toa: self.clutter.max_toa,
        }
    }

    pub fn slam_params(&self) -> SlamParams {
        let f = &self.filter;
        SlamParams {
            survival_prob: f.survival_prob,
            birth_weight: f.birth_weight,
            prune_threshold: f.prune_threshold,
            merge_threshold: f.merge_threshold,
            max_components: f.max_components,
            extract_va: f.extract_va,
            extract_sp: f.extract_sp,
            extract_vs: f.extract_vs,
            association_gate: f.association_gate,
            likelihood_gate: f.likelihood_gate,
            likelihood: match f.likelihood {
                LikelihoodName::Sum => ParticleLikelihood::Sum,
                LikelihoodName::Product => ParticleLikelihood::Product,
            },
            resample_ratio: f.resample_ratio,
            scatterer_birth: ScattererBirth {
                velocity_var: Vec3::from(f.birth_velocity_var),
                turn_rate_std: f.birth_turn_rate_std,
                turn_rate_max: f.birth_turn_rate_max,
                max_speed: f.max_scatterer_speed,
            },
        }
    }

    pub fn fusion_params(&self) -> FusionParams {
        let u = &self.fusion;
        FusionParams {
            prune_threshold: u.prune_threshold,
            merge_threshold: u.merge_threshold,
            average_merge_threshold: u.average_merge_threshold,
            max_components: u.max_components,
            location_gate: u.location_gate,
            velocity_gate: u.velocity_gate,
            static_unmatched_in_fov: u.static_unmatched_in_fov,
            scatterer_unmatched_in_fov: u.scatterer_unmatched_in_fov,
            survival_prob: self.filter.survival_prob,
            ego_cov_floor: StateVec::from_column_slice(&u.ego_cov_floor),
        }
    }

    pub fn gospa_params(&self) -> GospaParams {
        GospaParams {
            cutoff: self.gospa.cutoff,
            order: self.gospa.order,
            alpha: self.gospa.alpha,
        }
    }

    pub fn prior_cov(&self, vehicle: usize) -> StateCov {
        StateCov::from_diagonal(&StateVec::from_column_slice(
            &self.scenario.vehicles[vehicle].prior_var,
        ))
    }

    /// Whether `vehicle` uplinks at `step` (steps count from 1).
    pub fn fuses_at(&self, vehicle: usize, step: usize) -> bool {
        let v = &self.scenario.vehicles[vehicle];
        step >= v.fusion_start && (step - v.fusion_start).is_multiple_of(v.fusion_period)
    }
}

fn check(ok: bool, key: &str, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            key: key.to_string(),
            line: None,
            message: message.to_string(),
        })
    }
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn nonneg(xs: &[f64]) -> bool {
    xs.iter().all(|x| *x >= 0.0)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first assignment to `key` (optionally `section.key`), if
/// present.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let (section, name) = match key.rsplit_once('.') {
        Some((s, n)) => (Some(s), n),
        None => (None, key),
    };
    let start = section
        .and_then(|s| {
            text.lines()
                .position(|l| l.trim().starts_with('[') && l.trim().trim_matches(['[', ']']) == s)
        })
        .unwrap_or(0);
    text.lines()
        .enumerate()
        .skip(start)
        .find(|(_, l)| {
            l.trim_start()
                .strip_prefix(name)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|(i, _)| i + 1)
}
