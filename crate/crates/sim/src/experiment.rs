//! Monte Carlo driver: local filters, base-station fusion and metrics.

use rayon::prelude::*;
use thiserror::Error;

use mmslam_core::fusion::{
    average_map, downlink, place_ego, AccumulatedFov, BaseStation, EgoPosterior, FusionEvent,
    Uplink,
};
use mmslam_core::linalg::Vec3;
use mmslam_core::local_slam::{LocalFilter, Mode, SlamError};
use mmslam_core::metrics::{gospa, GospaResult};
use mmslam_core::LandmarkType;

use crate::config::Config;
use crate::scenario::{generate_measurements, stream_rng, Scenario, ScenarioError, Stream};

/// Map types reported per step, in output order.
pub const MAP_TYPES: [LandmarkType; 3] = [LandmarkType::Va, LandmarkType::Sp, LandmarkType::Vs];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("vehicle {vehicle}: {source}")]
    Filter {
        vehicle: usize,
        #[source]
        source: SlamError,
    },
    #[error("vehicle {vehicle} estimate is not finite at step {step}")]
    Diverged { vehicle: usize, step: usize },
}

/// One row of the metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub step: usize,
    pub mode: Mode,
    pub run: usize,
    pub map_type: LandmarkType,
    pub gospa: f64,
    pub gospa_loc: f64,
    pub gospa_miss: f64,
    pub gospa_false: f64,
    /// Root mean square of the vehicles' position errors at this step.
    pub rmse_loc: f64,
}

/// Everything one (mode, run) pair produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub mode: Mode,
    pub run: usize,
    pub rows: Vec<MetricRow>,
    pub fusion_events: Vec<FusionEvent>,
    /// Steps at which some particle set lost all its weight.
    pub degenerate_steps: Vec<(usize, usize)>,
}

impl RunArtifacts {
    /// Metric series of one map type, ordered by step.
    pub fn series(&self, map_type: LandmarkType) -> impl Iterator<Item = &MetricRow> {
        self.rows.iter().filter(move |r| r.map_type == map_type)
    }
}

#[derive(Debug)]
pub struct FailedRun {
    pub mode: Mode,
    pub run: usize,
    pub error: RunError,
}

#[derive(Debug, Default)]
pub struct Ablation {
    pub runs: Vec<RunArtifacts>,
    pub failed: Vec<FailedRun>,
}

/// Runs every (mode, run) pair. Failed runs are logged and excluded.
pub fn run_ablation(config: &Config, modes: &[Mode]) -> Ablation {
    let jobs: Vec<(Mode, usize)> = modes
        .iter()
        .flat_map(|m| (0..config.runs).map(move |r| (*m, r)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(mode, run)| (mode, run, run_single(config, mode, run)))
        .collect();
    let mut out = Ablation::default();
    for (mode, run, res) in results {
        match res {
            Ok(a) => out.runs.push(a),
            Err(error) => {
                log::warn!("{} run {run} failed and is excluded: {error}", mode.name());
                out.failed.push(FailedRun { mode, run, error });
            }
        }
    }
    out
}

/// One Monte Carlo run of `mode`. Truth, measurements and every filter
/// random stream depend on `(config.seed, run)` only.
pub fn run_single(config: &Config, mode: Mode, run: usize) -> Result<RunArtifacts, RunError> {
    let scenario = Scenario::generate(config, run)?;
    let env = &scenario.env;
    let dt = scenario.dt;
    let noise = config.noise_config();
    let clutter = config.clutter_model();
    let fusion_params = config.fusion_params();
    let gospa_params = config.gospa_params();
    let n_veh = scenario.vehicles();

    let mut filters = Vec::with_capacity(n_veh);
    for (v, s0) in config.initial_states().iter().enumerate() {
        let mut rng = stream_rng(config.seed, run, v, Stream::Prior);
        let f = LocalFilter::new(
            s0,
            &config.prior_cov(v),
            config.particles,
            mode,
            config.slam_params(),
            noise.clone(),
            clutter,
            &mut rng,
        )
        .map_err(|source| RunError::Filter { vehicle: v, source })?;
        filters.push(f);
    }
    let mut meas_rng: Vec<_> = (0..n_veh)
        .map(|v| stream_rng(config.seed, run, v, Stream::Measurement))
        .collect();
    let mut motion_rng: Vec<_> = (0..n_veh)
        .map(|v| stream_rng(config.seed, run, v, Stream::Motion))
        .collect();
    let mut birth_rng: Vec<_> = (0..n_veh)
        .map(|v| stream_rng(config.seed, run, v, Stream::Birth))
        .collect();
    let mut resample_rng: Vec<_> = (0..n_veh)
        .map(|v| stream_rng(config.seed, run, v, Stream::Resample))
        .collect();
    let mut fovs: Vec<_> = (0..n_veh)
        .map(|_| AccumulatedFov::new(env.gamma_d))
        .collect();
    let mut bs = BaseStation::default();
    let mut seen_sp = vec![false; env.sp_positions.len()];
    let true_va = env.virtual_anchors();

    let mut rows = Vec::with_capacity(scenario.steps() * MAP_TYPES.len());
    let mut fusion_events = Vec::new();
    let mut degenerate_steps = Vec::new();

    for step in 1..=scenario.steps() {
        for (i, sp) in env.sp_positions.iter().enumerate() {
            seen_sp[i] |= scenario
                .trajectories
                .iter()
                .any(|t| env.in_fov(&t[step].position, sp, LandmarkType::Sp));
        }
        let true_sp: Vec<Vec3> = env
            .sp_positions
            .iter()
            .zip(&seen_sp)
            .filter(|(_, s)| **s)
            .map(|(p, _)| *p)
            .collect();

        let mut sums = [GospaResult::default(); 3];
        let mut sq_err = 0.0;
        for v in 0..n_veh {
            let truth = &scenario.trajectories[v][step];
            let scan = generate_measurements(
                truth,
                &scenario.targets(v, step),
                env,
                &noise.measurement_cov,
                &clutter,
                &mut meas_rng[v],
            );
            let filter = &mut filters[v];
            filter.predict(dt, env, &mut motion_rng[v], &mut birth_rng[v]);
            if !filter.correct(&scan, env) {
                degenerate_steps.push((v, step));
            }
            let ego = EgoPosterior::from_particles(&filter.particles, &fusion_params.ego_cov_floor);
            fovs[v].push(ego.position());

            if config.fuses_at(v, step) {
                let vs = mode.fuses_scatterers().then(|| {
                    let avg = average_map(&filter.particles, LandmarkType::Vs, &fusion_params);
                    place_ego(&avg, &ego, fusion_params.location_gate)
                });
                let uplink = Uplink {
                    vehicle: v,
                    step,
                    va: average_map(&filter.particles, LandmarkType::Va, &fusion_params),
                    sp: average_map(&filter.particles, LandmarkType::Sp, &fusion_params),
                    vs,
                    fov: fovs[v].clone(),
                };
                let event = bs.fuse(&uplink, env, &fusion_params, dt, &noise.vs_process_cov);
                let scatterers = mode
                    .fuses_scatterers()
                    .then_some((&ego, fusion_params.location_gate));
                downlink(filter, &bs.map, scatterers);
                fovs[v].clear();
                fusion_events.push(event);
            }

            filter.resample(&mut resample_rng[v]);
            let est = filter.estimate();
            let err = (est.vehicle.position - truth.position).norm_squared();
            if !err.is_finite() {
                return Err(RunError::Diverged { vehicle: v, step });
            }
            sq_err += err;

            let others: Vec<Vec3> = scenario
                .scatterers(v, step)
                .iter()
                .map(|t| t.position())
                .collect();
            let vs_est: Vec<Vec3> = est.vs.iter().map(|x| Vec3::new(x[0], x[1], x[2])).collect();
            let per_type = [
                gospa(&est.va, &true_va, &gospa_params),
                gospa(&est.sp, &true_sp, &gospa_params),
                gospa(&vs_est, &others, &gospa_params),
            ];
            for (acc, g) in sums.iter_mut().zip(per_type) {
                acc.distance += g.distance;
                acc.localization += g.localization;
                acc.missed += g.missed;
                acc.false_targets += g.false_targets;
            }
        }
        let n = n_veh as f64;
        let rmse_loc = (sq_err / n).sqrt();
        for (kind, g) in MAP_TYPES.iter().zip(sums) {
            rows.push(MetricRow {
                step,
                mode,
                run,
                map_type: *kind,
                gospa: g.distance / n,
                gospa_loc: g.localization / n,
                gospa_miss: g.missed / n,
                gospa_false: g.false_targets / n,
                rmse_loc,
            });
        }
    }
    Ok(RunArtifacts {
        mode,
        run,
        rows,
        fusion_events,
        degenerate_steps,
    })
}

/// Mean of `value` over runs of `mode` and over `steps` (inclusive).
pub fn window_mean<F>(
    runs: &[RunArtifacts],
    mode: Mode,
    map_type: LandmarkType,
    steps: std::ops::RangeInclusive<usize>,
    value: F,
) -> Option<f64>
where
    F: Fn(&MetricRow) -> f64,
{
    let vals: Vec<f64> = runs
        .iter()
        .filter(|r| r.mode == mode)
        .flat_map(|r| r.series(map_type))
        .filter(|row| steps.contains(&row.step))
        .map(&value)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}
