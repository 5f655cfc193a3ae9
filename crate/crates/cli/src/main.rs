//! `hwd`: batch driver for the hwd-core numerics. Every run prints (or
//! writes to `--out`) one report holding the tool version, the resolved
//! configuration and the result.

mod commands;
mod inputs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, ValueEnum};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] hwd_core::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use hwd_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::PrecisionLoss { .. }) => 3,
            CliError::Core(
                E::InvalidInput(_)
                | E::InvalidGamma(_)
                | E::InvalidLengths(_)
                | E::DilationOverflow(_)
                | E::OutsideDisc(_)
                | E::FamilyInvalid(_)
                | E::EpsilonTooLarge(_)
                | E::MassExceedsTotal { .. }
                | E::PreconditionSeriesConverges,
            ) => 2,
            CliError::Core(_) | CliError::Write { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

/// Convention for integrals over the circle: normalized `dm = dθ/2π` or
/// raw `dθ` (a factor 2π larger).
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Dm,
    Dtheta,
}

impl Normalization {
    pub fn factor(self) -> f64 {
        match self {
            Normalization::Dm => 1.0,
            Normalization::Dtheta => std::f64::consts::TAU,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub rtol: f64,
    /// Panel cap per adaptive integral.
    #[arg(long, global = true, default_value_t = 1 << 20)]
    pub max_panels: usize,
    /// Circle-integral convention for reported energies and masses.
    #[arg(long, global = true, value_enum, default_value_t = Normalization::Dm)]
    pub normalization: Normalization,
}

#[derive(Debug, Parser)]
#[command(name = "hwd", version, about = "Harmonically weighted Dirichlet space numerics")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: commands::Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.command, &cli.global) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("hwd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
