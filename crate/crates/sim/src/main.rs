use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use mmslam_core::local_slam::Mode;
use mmslam_sim::config::{Config, ConfigError, ModeName};
use mmslam_sim::experiment::run_ablation;
use mmslam_sim::output::write_all;
use mmslam_sim::scenario::Scenario;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "mmslam",
    version,
    about = "Cooperative mmWave PHD-SLAM with vehicle scatterers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured mode.
    Run(RunArgs),
    /// Run baseline, cm1 and full on the same scenario and seeds.
    Ablate(RunArgs),
    /// Check the config and the scenario geometry.
    Validate(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file; the built-in default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Overrides the config's mode (`run` only).
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load(args: &ConfigArgs) -> Result<Config, ConfigError> {
    match &args.config {
        Some(path) => Config::load(path),
        None => Ok(Config::default_config()),
    }
}

fn load_overridden(args: &RunArgs) -> Result<Config, ConfigError> {
    let mut config = load(&args.config)?;
    if let Some(m) = args.mode {
        config.mode = m;
    }
    if let Some(r) = args.runs {
        config.runs = r;
    }
    if let Some(p) = args.particles {
        config.particles = p;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn execute(args: &RunArgs, modes: &[Mode]) -> ExitCode {
    let config = match load_overridden(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = Scenario::generate(&config, 0) {
        eprintln!("config error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let started = Instant::now();
    let ablation = run_ablation(&config, modes);
    let elapsed = started.elapsed().as_secs_f64();
    if let Err(e) = write_all(&args.out, &config, modes, &ablation, elapsed) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }
    log::info!(
        "{} runs finished in {elapsed:.1} s, {} failed; results in {}",
        ablation.runs.len() + ablation.failed.len(),
        ablation.failed.len(),
        args.out.display()
    );
    if ablation.runs.is_empty() {
        eprintln!("error: every run failed");
        return ExitCode::from(EXIT_RUNTIME);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => {
            let mode = args.mode.map(Mode::from);
            let modes = match load(&args.config) {
                Ok(c) => [mode.unwrap_or(c.mode())],
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            execute(args, &modes)
        }
        Command::Ablate(args) => execute(args, &Mode::ALL),
        Command::Validate(args) => match load(args) {
            Ok(c) => match Scenario::generate(&c, 0) {
                Ok(_) => {
                    println!("ok");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("scenario error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
            },
            Err(e) => {
                eprintln!("config error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}
