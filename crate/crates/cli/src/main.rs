//! Command-line front end: scenario files in, result JSON and plot-ready
//! CSV files out.
//!
//! Exit codes: 0 success, 1 estimation failure, 2 configuration or I/O
//! error. Failures also emit a machine-readable error JSON on stderr.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use doa_core::geometry::GeometryError;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "doa",
    about = "Single-snapshot super-resolution direction-of-arrival estimation for arbitrary planar arrays",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate arrival angles and amplitudes for one scenario file.
    Estimate(EstimateArgs),
    /// Tabulate the minimum Fourier order against sensor radius.
    AnalyzeManifold(AnalyzeArgs),
    /// Monte-Carlo success-probability sweep from a sweep config file.
    Sweep(SweepArgs),
    /// Run the bundled three-source demonstration scenario.
    Demo(DemoArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Scenario file (geometry, sources, solver options).
    #[arg(long)]
    scenario: PathBuf,
    /// Geometry CSV overriding the scenario's [geometry] section.
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of Fourier coefficients (odd); overrides the scenario.
    #[arg(long)]
    p: Option<usize>,
    /// Coefficient cutoff in dB below the peak; overrides the scenario.
    #[arg(long)]
    gamma_db: Option<f64>,
    /// Phase reference for loaded geometries.
    #[arg(long, default_value = "centroid", value_parser = ["centroid", "origin"])]
    reference: String,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Radii as start:stop:step or a comma list (units of wavelength).
    #[arg(long, default_value = "2:10:0.5")]
    radii: String,
    /// Cutoff levels in dB, comma separated.
    #[arg(long, default_value = "-160", allow_hyphen_values = true)]
    gammas: String,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Trials per cell; overrides the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Skip cells already present in the output CSV.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct DemoArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Error carrying its exit code and a machine-readable kind.
#[derive(Debug)]
pub struct CliError {
    kind: &'static str,
    message: String,
    path: Option<PathBuf>,
    exit_code: i32,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: "config",
            message: message.into(),
            path: None,
            exit_code: 2,
        }
    }

    pub fn config_with_path(message: impl Into<String>, path: &Path) -> Self {
        Self {
            kind: "config",
            message: message.into(),
            path: Some(path.to_path_buf()),
            exit_code: 2,
        }
    }

    pub fn io(message: impl Into<String>, path: &Path) -> Self {
        Self {
            kind: "io",
            message: message.into(),
            path: Some(path.to_path_buf()),
            exit_code: 2,
        }
    }

    pub fn estimation(message: impl Into<String>) -> Self {
        Self {
            kind: "estimation",
            message: message.into(),
            path: None,
            exit_code: 1,
        }
    }

    pub fn from_geometry(e: GeometryError) -> Self {
        Self::config(e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorJson<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(args) => commands::cmd_estimate(&args),
        Command::AnalyzeManifold(args) => commands::cmd_analyze_manifold(&args),
        Command::Sweep(args) => commands::cmd_sweep(&args),
        Command::Demo(args) => commands::cmd_demo(&args),
    };
    if let Err(e) = result {
        let body = ErrorJson {
            error: ErrorBody {
                kind: e.kind,
                message: &e.message,
                path: e.path.as_ref().map(|p| p.display().to_string()),
            },
        };
        eprintln!(
            "{}",
            serde_json::to_string(&body).unwrap_or_else(|_| e.message.clone())
        );
        std::process::exit(e.exit_code);
    }
}
