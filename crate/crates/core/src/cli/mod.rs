//! Command-line front end: `scan`, `spectrum`, `modes`, `basis`,
//! `completeness` and `report`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use commands::{run, Outcome};
pub use config::{ConfigError, RunConfig};

use crate::error::Error;

pub const SCHEMA: &str = "pt-spectral/1";

#[derive(Debug, Parser)]
#[command(name = "pt-spectral", version, about = "Spectra, associated functions and bases of complex Dirichlet problems on [-pi, pi]")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Sample D(k) and dD/dk on a uniform k grid.
    Scan(#[command(flatten)] Flags),
    /// Locate and classify the roots of D(k).
    Spectrum(#[command(flatten)] Flags),
    /// Export eigenfunctions, associated functions and their norms.
    Modes(#[command(flatten)] Flags),
    /// Build the bilinear-orthonormal basis and its Gram matrix.
    Basis(#[command(flatten)] Flags),
    /// Reconstruction error curves with and without associated functions.
    Completeness(#[command(flatten)] Flags),
    /// Everything above in one run.
    Report(#[command(flatten)] Flags),
}

#[derive(Debug, Clone, PartialEq, clap::Args)]
pub struct Flags {
    /// key=value config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Builtin name (paper, zero) or an expression in x.
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub kmin: Option<f64>,
    #[arg(long)]
    pub kmax: Option<f64>,
    /// Number of scan points.
    #[arg(long)]
    pub n: Option<usize>,
    /// Integrator tolerance [default: 1e-10].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Grid nodes on [-pi, pi], odd [default: 4097].
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write JSON output (both formats when neither flag is given).
    #[arg(long)]
    pub json: bool,
    /// Write CSV output.
    #[arg(long)]
    pub csv: bool,
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Scan(f)
            | Command::Spectrum(f)
            | Command::Modes(f)
            | Command::Basis(f)
            | Command::Completeness(f)
            | Command::Report(f) => f,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Scan(_) => "scan",
            Command::Spectrum(_) => "spectrum",
            Command::Modes(_) => "modes",
            Command::Basis(_) => "basis",
            Command::Completeness(_) => "completeness",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(Error),
    #[error("{0}")]
    Structural(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Structural(_) => 4,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::UnknownName(_)
            | Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            Error::ZeroNormWithoutChain { .. } | Error::DegenerateGram(_) => {
                CliError::Structural(e.to_string())
            }
            other => CliError::Numeric(other),
        }
    }
}

/// Config file (if any) overlaid with explicit flags.
pub fn resolve_config(flags: &Flags) -> Result<RunConfig, CliError> {
    let mut c = RunConfig::default();
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        c.apply_file_str(&text)?;
    }
    if let Some(v) = &flags.potential {
        c.potential = v.clone();
    }
    if let Some(v) = flags.kmin {
        c.kmin = v;
    }
    if let Some(v) = flags.kmax {
        c.kmax = v;
    }
    if let Some(v) = flags.n {
        c.n_scan = v;
    }
    if let Some(v) = flags.tol {
        c.tol = v;
    }
    if let Some(v) = flags.nodes {
        c.n_nodes = v;
    }
    if let Some(v) = &flags.out {
        c.out = v.clone();
    }
    c.json |= flags.json;
    c.csv |= flags.csv;
    Ok(c)
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = resolve_config(cli.command.flags()).and_then(|cfg| run(&cli.command, &cfg));
    match result {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            match outcome.failure {
                Some(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code())
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
