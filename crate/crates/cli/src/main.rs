//! `radiomap`: command-line front end for grid building, feature
//! extraction, model fitting and training, online replay, evaluation and
//! signal-map export.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radiomap::conventional::ModelKind;
use radiomap::learned::Variant;
use radiomap::signal_map::MapFormat;

#[derive(Debug, Parser)]
#[command(name = "radiomap", version, about = "Radio propagation modeling from occupancy grids", arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate LiDAR scans into an occupancy grid dump.
    BuildGrid(BuildGridArgs),
    /// Extract link features from logs and a grid.
    Features(FeaturesArgs),
    /// Fit a conventional path loss model.
    Fit(FitArgs),
    /// Train a network offline.
    Train(TrainArgs),
    /// Mean absolute error of a model on samples.
    Eval(EvalArgs),
    /// Predicted coverage map.
    Map(MapArgs),
    /// Generate a synthetic fixture.
    Synth(SynthArgs),
    /// Replay logs with online training and re-fitting.
    Replay(ReplayArgs),
    /// Re-execute a command from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Voxel edge length, m.
    #[arg(long, default_value_t = 0.5)]
    pub voxel_size: f64,
    /// Sensor range; longer points count as no-returns, m.
    #[arg(long, default_value_t = 100.0)]
    pub max_range: f64,
}

#[derive(Debug, Args)]
pub struct LogArgs {
    #[arg(long)]
    pub measurements: PathBuf,
    #[arg(long)]
    pub poses: PathBuf,
    /// Radio registry; enables static-radio outlier removal.
    #[arg(long)]
    pub radios: Option<PathBuf>,
    /// Largest pose/measurement time offset accepted, s.
    #[arg(long, default_value_t = radiomap::pipeline::DEFAULT_MAX_SKEW_S)]
    pub max_skew_s: f64,
    #[arg(long, default_value_t = radiomap::pipeline::DEFAULT_OUTLIER_RADIUS_M)]
    pub outlier_radius_m: f64,
    /// Impute noise-floor records for pairs silent for this long, s.
    #[arg(long)]
    pub augment_window_s: Option<f64>,
    #[arg(long, default_value_t = radiomap::pipeline::NOISE_FLOOR_DBM, allow_negative_numbers = true)]
    pub noise_floor_dbm: f64,
}

#[derive(Debug, Args)]
pub struct BuildGridArgs {
    /// Scan files, integrated in order.
    #[arg(long, required = true, num_args = 1..)]
    pub scans: Vec<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub logs: LogArgs,
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub voxel_size: f64,
    /// Transmit power used for the RSS correlation report, dBm.
    #[arg(long, default_value_t = 30.0)]
    pub tx_power_dbm: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value = "visibility")]
    pub model: ModelKind,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value = "vox")]
    pub variant: Variant,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Upper bound on offline epochs.
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
#[group(id = "predictor", required = true, multiple = false, args = ["params", "mlp"])]
pub struct PredictorArgs {
    /// Params file; the last record (of `--model`, if given) is used.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, requires = "params")]
    pub model: Option<ModelKind>,
    /// Network model file.
    #[arg(long)]
    pub mlp: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub grid: PathBuf,
    /// Transmitters are the radios with a fixed position.
    #[arg(long)]
    pub radios: PathBuf,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[arg(long, default_value_t = 0.5)]
    pub voxel_size: f64,
    /// Map cell edge length, m.
    #[arg(long, default_value_t = 1.0)]
    pub resolution: f64,
    #[arg(long, default_value_t = radiomap::signal_map::DEFAULT_THRESHOLD_DBM, allow_negative_numbers = true)]
    pub threshold_dbm: f64,
    #[arg(long, default_value = "both")]
    pub format: MapFormat,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
#[group(id = "world", required = true, multiple = false, args = ["preset", "world_spec"])]
pub struct SynthArgs {
    /// Built-in world: box, corridor, open, confined, branch, empty.
    #[arg(long)]
    pub preset: Option<String>,
    /// World spec TOML.
    #[arg(long = "world")]
    pub world_spec: Option<PathBuf>,
    /// Overrides the world's noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the schedule end, s.
    #[arg(long)]
    pub end_s: Option<f64>,
    #[arg(long)]
    pub voxel_size: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub logs: LogArgs,
    #[arg(long, num_args = 0..)]
    pub scans: Vec<PathBuf>,
    /// Starting grid; scans are integrated on top of it.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Offline-trained network to adapt online.
    #[arg(long)]
    pub mlp: Option<PathBuf>,
    #[command(flatten)]
    pub grid_args: GridArgs,
    #[arg(long, default_value_t = 60.0)]
    pub window_s: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs_online: usize,
    #[arg(long, default_value_t = 1)]
    pub k_minutes: usize,
    #[arg(long)]
    pub no_refit: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

fn escape(msg: &str) -> String {
    msg.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match commands::dispatch(cli.command, std::env::args().skip(1).collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: kind={} msg=\"{}\"", e.kind(), escape(&e.to_string()));
            ExitCode::from(1)
        }
    }
}
