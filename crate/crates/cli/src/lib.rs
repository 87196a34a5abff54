//! Batch front end for `toda-core`: grading reports, equation emission,
//! residual verification and characteristic solves over JSON files.

pub mod commands;
pub mod error;
pub mod files;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::{CliError, CliResult, Exit};

#[derive(Debug, Parser)]
#[command(
    name = "toda",
    version,
    about = "Gradations, Toda equations and their numerics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Latex,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StencilArg {
    Centered2,
    Centered4,
    Lie,
}

impl From<StencilArg> for toda_core::toda::Stencil {
    fn from(s: StencilArg) -> Self {
        match s {
            StencilArg::Centered2 => Self::Centered2,
            StencilArg::Centered4 => Self::Centered4,
            StencilArg::Lie => Self::Lie,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grading operator, block structure and graded dimensions for Dynkin labels.
    Grade(GradeArgs),
    /// Independent Toda equations of a system.
    Equations(EquationsArgs),
    /// Finite-difference residual and curvature of a sampled field.
    Verify(VerifyArgs),
    /// March characteristic data into a grid file.
    Solve(SolveArgs),
    /// Quick built-in consistency checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct GradeArgs {
    #[arg(long)]
    pub series: String,
    #[arg(long)]
    pub rank: usize,
    /// Comma-separated Dynkin labels.
    #[arg(long, value_delimiter = ',', required = true)]
    pub labels: Vec<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EquationsArgs {
    /// System file; alternatively give --series and --blocks.
    pub system: Option<PathBuf>,
    #[arg(long, conflicts_with = "system", requires = "blocks")]
    pub series: Option<String>,
    /// Defaults to the rank implied by the block sizes.
    #[arg(long, conflicts_with = "system")]
    pub rank: Option<usize>,
    /// Comma-separated block sizes.
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "system",
        requires = "series"
    )]
    pub blocks: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub system: PathBuf,
    pub grid: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = StencilArg::Centered2)]
    pub stencil: StencilArg,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub system: PathBuf,
    pub boundary: PathBuf,
    /// Samples per side; the boundary lines are subsampled to it.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// What a command printed and how the process should exit.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub exit: Exit,
    /// Diagnostic for a nonzero exit.
    pub diagnostic: Option<CliError>,
}

impl Outcome {
    pub fn ok(stdout: String) -> Self {
        Self {
            stdout,
            exit: Exit::Ok,
            diagnostic: None,
        }
    }
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Grade(a) => commands::grade(&a),
        Command::Equations(a) => commands::equations(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Selftest(a) => commands::selftest(&a),
    }
}

/// Parses `argv` and runs it; usage errors become `invalid-input`.
pub fn run_args<I, T>(argv: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(cli),
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Ok(Outcome::ok(e.to_string()))
                }
                _ => {
                    let text = e.to_string();
                    let first = text
                        .lines()
                        .next()
                        .unwrap_or("")
                        .trim_start_matches("error: ")
                        .to_string();
                    Err(CliError::input(format!("usage: {first}")))
                }
            }
        }
    }
}
