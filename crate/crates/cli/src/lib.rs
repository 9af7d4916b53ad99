//! The `weakdr` command-line tool: instance files, reports and the four
//! subcommands `guarantee`, `solve`, `verify` and `estimate-gamma`.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 usage or parse
//! error, 3 I/O error.

pub mod commands;
pub mod error;
pub mod instance;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "weakdr", version, about = "Maximize non-monotone weakly DR-submodular functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the guarantee curve and write it as CSV.
    Guarantee(GuaranteeArgs),
    /// Run the recursive driver on an instance file.
    Solve(SolveArgs),
    /// Run randomized property suites.
    Verify(VerifyArgs),
    /// Estimate the weak-DR parameter of an instance's objective.
    EstimateGamma(EstimateArgs),
}

#[derive(Debug, Args)]
pub struct GuaranteeArgs {
    /// A single γ; repeatable.
    #[arg(long = "gamma", value_name = "GAMMA")]
    pub gammas: Vec<f64>,
    /// Inclusive range `start:stop:step`.
    #[arg(long, value_name = "START:STOP:STEP")]
    pub range: Option<String>,
    #[arg(long, default_value_t = 10.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 1001)]
    pub grid_r: usize,
    #[arg(long, default_value_t = 1001)]
    pub grid_t: usize,
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
    /// CSV destination; standard output if omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    /// Report destination (JSON).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub max_calls: Option<usize>,
    #[arg(long)]
    pub max_levels: Option<usize>,
    /// Leave wall time and creation time out of the report.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Lemmas,
    DoubleGreedy,
    FwgConsistency,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Additive tolerance; 1e-6 for `lemmas`, 1e-7 otherwise.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Where counterexample instances are written.
    #[arg(long, default_value = ".")]
    pub replay_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    pub instance: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub samples: usize,
    /// Defaults to the instance seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let mut stdout = std::io::stdout().lock();
    match commands::dispatch(&cli.command, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
