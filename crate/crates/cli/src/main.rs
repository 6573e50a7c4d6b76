//! `sgspin`: build the device field, run ensembles, re-aggregate results and
//! print diagnostics. Summaries go to stdout, logs to stderr.

mod commands;
mod field;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sgspin", version, about = "Semi-classical Stern-Gerlach spin simulation")]
pub struct Cli {
    /// JSON configuration file; omitted keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`); created if missing.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads (overrides `experiment.threads`).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Ensemble seed (overrides `experiment.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Evaluate the field by direct quadrature instead of the grid cache.
    #[arg(long, global = true)]
    pub direct_field: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the field grid cache and optional slice exports.
    Field(FieldArgs),
    /// Run an ensemble and write runs.csv, flip_curve.csv and slices.csv.
    Run(RunArgs),
    /// Re-aggregate an existing runs.csv.
    Stats(StatsArgs),
    /// Flux-dominance check and approach-line drive profile.
    Diag(DiagArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SlicePlane {
    Yz,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Export a field slice in this plane.
    #[arg(long, value_enum)]
    pub slice: Option<SlicePlane>,
    /// Slice position along x: metres, or a fraction of the device length with an `L` suffix (`0.5L`).
    #[arg(long, default_value = "0.5L")]
    pub at_x: String,
    /// Points per slice axis.
    #[arg(long, default_value_t = 41)]
    pub slice_points: usize,
    /// Export B and its derivatives along y through the gap centre at x = L/2.
    #[arg(long)]
    pub divergence_profile: bool,
    /// Points in the divergence profile.
    #[arg(long, default_value_t = 81)]
    pub profile_points: usize,
    /// Skip building the grid cache.
    #[arg(long)]
    pub no_grid: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Number of φ_i blocks (overrides `experiment.phi_steps`).
    #[arg(long)]
    pub phi_steps: Option<usize>,
    /// Runs per φ_i block (overrides `experiment.reps_per_phi`).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Dump trajectories of the first N runs (overrides `output.trajectories`).
    #[arg(long)]
    pub trajectories: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// runs.csv to aggregate; defaults to the one in the output directory.
    #[arg(long)]
    pub runs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagArgs {
    /// Write the flux-dominance check as JSON.
    #[arg(long)]
    pub flux: bool,
    /// Write |Bx|/|Bz| along the approach line.
    #[arg(long)]
    pub drive_profile: bool,
    /// Points in the drive profile.
    #[arg(long, default_value_t = 201)]
    pub profile_points: usize,
    /// Device field for the flux check, T.
    #[arg(long)]
    pub flux_b_sg: Option<f64>,
    /// Moment for the flux check, J/T.
    #[arg(long)]
    pub flux_mu: Option<f64>,
    /// Permeability for the flux check, T·m/A.
    #[arg(long)]
    pub flux_mu0: Option<f64>,
    /// Radius of the moment's volume for the flux check, m.
    #[arg(long)]
    pub flux_radius: Option<f64>,
}

/// Failure classes with their process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Field(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Field(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<sgspin::config::ConfigError> for CliError {
    fn from(e: sgspin::config::ConfigError) -> Self {
        match e {
            sgspin::config::ConfigError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<sgspin::magnetostatics::FieldError> for CliError {
    fn from(e: sgspin::magnetostatics::FieldError) -> Self {
        CliError::Field(e.to_string())
    }
}

impl From<sgspin::experiment::ExperimentError> for CliError {
    fn from(e: sgspin::experiment::ExperimentError) -> Self {
        use sgspin::experiment::ExperimentError as E;
        match e {
            E::InvalidConfig(_) => CliError::Config(e.to_string()),
            E::Field(_) => CliError::Field(e.to_string()),
            E::ThreadPool(_) | E::RunsTable(_) => CliError::Io(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
