//! `aw-harness`: parameters, laws, path samples and identity checks.
//!
//! Exit codes: 0 success, 1 verification failure, 2 inadmissible input,
//! 3 numerical singularity.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use aw_harness::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "aw-harness",
    version,
    about = "Askey-Wilson processes and quadratic harnesses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the product conditions on (A, B, C, D, q).
    Validate(ParamsArg),
    /// Translate between (A, B, C, D, q) and the greeks (η, θ, σ, τ, γ).
    Params(ParamsCmd),
    /// Marginal law π_t, or the transition P_{s,t}(x, ·) when --s and --x are given.
    Law(LawCmd),
    /// Simulate Y paths on a grid of Y-times and export Y, Z and X.
    Sample(SampleCmd),
    /// Run identity suites over randomised admissible parameters.
    Verify(VerifyCmd),
}

#[derive(Args, Serialize, Clone)]
pub struct ParamsArg {
    /// Inline JSON (`{"A": .., "B": .., "C": .., "D": .., "q": ..}`, complex as [re, im]) or a file.
    #[arg(long)]
    pub params: String,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    QMeixner,
    BiPoisson,
    Free,
    PurelyQuadratic,
}

#[derive(Args, Serialize)]
pub struct ParamsCmd {
    /// Parameters to translate into greeks.
    #[arg(
        long,
        conflicts_with = "from_greek",
        required_unless_present = "from_greek"
    )]
    pub params: Option<String>,
    /// Accepted for symmetry with --from-greek; the default direction.
    #[arg(long)]
    pub to_greek: bool,
    /// Build (A, B, C, D, q) for a family from its greeks.
    #[arg(long, value_enum)]
    pub from_greek: Option<Family>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Serialize)]
pub struct LawCmd {
    #[arg(long)]
    pub params: String,
    /// Y-time of the law.
    #[arg(long)]
    pub t: f64,
    /// Earlier Y-time of the conditioning value.
    #[arg(long, requires = "x")]
    pub s: Option<f64>,
    /// Conditioning value Y_s.
    #[arg(long, requires = "s", allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// Number of density grid points (Chebyshev nodes in (-1, 1)).
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct SampleCmd {
    #[arg(long)]
    pub params: String,
    /// Strictly increasing Y-times inside I, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit a covariance report of X against min(s, t) instead of rows.
    #[arg(long)]
    pub summary: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Run on one thread.
    #[arg(long)]
    #[serde(skip)]
    pub sequential: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct VerifyCmd {
    /// qseries, measure, markov, martingale, discrete, bridge or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Number of random cases per check (default: each check's own size).
    #[arg(long)]
    pub sweep: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override every threshold.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub sequential: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("input: {0}")]
    Input(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("verification failed")]
    VerifyFailed,
    /// Already reported on stdout.
    #[error("inadmissible parameters")]
    Rejected,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::VerifyFailed => 1,
            CliError::Core(CoreError::Singular(_) | CoreError::NonConvergent { .. }) => 3,
            CliError::Io(_) | CliError::Csv(_) => 1,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Params(a) => commands::params(a),
        Command::Law(a) => commands::law(a),
        Command::Sample(a) => commands::sample(a),
        Command::Verify(a) => commands::verify(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Rejected) {
                eprintln!("aw-harness: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}
