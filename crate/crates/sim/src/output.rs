//! Result files: metrics table, fusion log, config echo and run summary.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use mmslam_core::fusion::FusionEvent;
use mmslam_core::local_slam::Mode;
use mmslam_core::LandmarkType;

use crate::config::Config;
use crate::experiment::{Ablation, MetricRow};

pub const METRICS_FILE: &str = "metrics.csv";
pub const FUSION_LOG_FILE: &str = "fusion_log.jsonl";
pub const CONFIG_ECHO_FILE: &str = "config_echo.toml";
pub const SUMMARY_FILE: &str = "summary.json";

pub const METRICS_HEADER: [&str; 9] = [
    "step",
    "mode",
    "run",
    "map_type",
    "gospa",
    "gospa_loc",
    "gospa_miss",
    "gospa_false",
    "rmse_loc",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: unknown {field} {value:?}")]
    Field {
        path: PathBuf,
        field: &'static str,
        value: String,
    },
}

/// Serialized form of one metrics row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub step: usize,
    pub mode: String,
    pub run: usize,
    pub map_type: String,
    pub gospa: f64,
    pub gospa_loc: f64,
    pub gospa_miss: f64,
    pub gospa_false: f64,
    pub rmse_loc: f64,
}

impl From<&MetricRow> for CsvRow {
    fn from(r: &MetricRow) -> Self {
        Self {
            step: r.step,
            mode: r.mode.name().to_string(),
            run: r.run,
            map_type: r.map_type.name().to_string(),
            gospa: r.gospa,
            gospa_loc: r.gospa_loc,
            gospa_miss: r.gospa_miss,
            gospa_false: r.gospa_false,
            rmse_loc: r.rmse_loc,
        }
    }
}

impl CsvRow {
    fn into_metric(self, path: &Path) -> Result<MetricRow, OutputError> {
        let bad = |field, value: &str| OutputError::Field {
            path: path.to_path_buf(),
            field,
            value: value.to_string(),
        };
        let mode = Mode::ALL
            .into_iter()
            .find(|m| m.name() == self.mode)
            .ok_or_else(|| bad("mode", &self.mode))?;
        let map_type = [LandmarkType::Va, LandmarkType::Sp, LandmarkType::Vs]
            .into_iter()
            .find(|k| k.name() == self.map_type)
            .ok_or_else(|| bad("map_type", &self.map_type))?;
        Ok(MetricRow {
            step: self.step,
            mode,
            run: self.run,
            map_type,
            gospa: self.gospa,
            gospa_loc: self.gospa_loc,
            gospa_miss: self.gospa_miss,
            gospa_false: self.gospa_false,
            rmse_loc: self.rmse_loc,
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the metrics table. Rows are sorted by mode, run, step and map type
/// so the file does not depend on scheduling.
pub fn write_metrics(path: &Path, rows: &[MetricRow]) -> Result<(), OutputError> {
    let mut sorted: Vec<&MetricRow> = rows.iter().collect();
    let mode_rank = |m: Mode| Mode::ALL.iter().position(|x| *x == m).unwrap_or(usize::MAX);
    sorted.sort_by_key(|r| (mode_rank(r.mode), r.run, r.step, r.map_type as u8));
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in sorted {
        w.serialize(CsvRow::from(r)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>, OutputError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(METRICS_HEADER.iter().copied()) {
        return Err(OutputError::Field {
            path: path.to_path_buf(),
            field: "header",
            value: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    r.deserialize::<CsvRow>()
        .map(|row| row.map_err(csv_err(path))?.into_metric(path))
        .collect()
}

fn event_json(mode: Mode, run: usize, e: &FusionEvent) -> serde_json::Value {
    let changes: Vec<_> = e
        .changes
        .iter()
        .map(|c| {
            json!({
                "map_type": c.kind.name(),
                "components_before": c.components_before,
                "mass_before": c.mass_before,
                "uplink_components": c.uplink_components,
                "uplink_mass": c.uplink_mass,
                "components_after": c.components_after,
                "mass_after": c.mass_after,
            })
        })
        .collect();
    json!({
        "mode": mode.name(),
        "run": run,
        "step": e.step,
        "vehicle": e.vehicle,
        "changes": changes,
    })
}

pub fn write_fusion_log(path: &Path, ablation: &Ablation) -> Result<(), OutputError> {
    let mut runs: Vec<_> = ablation.runs.iter().collect();
    runs.sort_by_key(|r| (Mode::ALL.iter().position(|m| *m == r.mode), r.run));
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = io::BufWriter::new(file);
    for r in runs {
        for e in &r.fusion_events {
            writeln!(w, "{}", event_json(r.mode, r.run, e)).map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Writes every result file into `dir`, creating it if needed.
pub fn write_all(
    dir: &Path,
    config: &Config,
    modes: &[Mode],
    ablation: &Ablation,
    wall_clock_s: f64,
) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows: Vec<MetricRow> = ablation
        .runs
        .iter()
        .flat_map(|r| r.rows.iter().cloned())
        .collect();
    write_metrics(&dir.join(METRICS_FILE), &rows)?;
    write_fusion_log(&dir.join(FUSION_LOG_FILE), ablation)?;
    let echo = dir.join(CONFIG_ECHO_FILE);
    fs::write(&echo, config.to_toml()).map_err(io_err(&echo))?;

    let failed: Vec<_> = ablation
        .failed
        .iter()
        .map(|f| json!({"mode": f.mode.name(), "run": f.run, "error": f.error.to_string()}))
        .collect();
    let degenerate: usize = ablation.runs.iter().map(|r| r.degenerate_steps.len()).sum();
    let summary = json!({
        "seed": config.seed,
        "modes": modes.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "runs": config.runs,
        "particles": config.particles,
        "steps": config.scenario.steps,
        "gospa": {
            "cutoff": config.gospa.cutoff,
            "order": config.gospa.order,
            "alpha": config.gospa.alpha,
        },
        "wall_clock_s": wall_clock_s,
        "failed_runs": failed,
        "degenerate_weight_resets": degenerate,
    });
    let path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).expect("json values serialize");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}
