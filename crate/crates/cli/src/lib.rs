//! Command-line front end: evaluate, optimize and simulate calibration plans
//! from a TOML configuration, and regenerate the reference table.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;
pub mod reference;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::{Format, RunConfig};
pub use error::CliError;

pub const THREADS_ENV: &str = "STIFFCAL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "stiffcal", version, about = "Test-pose optimal plans for elastostatic calibration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Criterion value and identification accuracy of an explicit plan.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Plan CSV (as written by `optimize --format csv`), overriding `[plan]`.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Search for the plan of `m` experiments minimizing the criterion.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo check of the analytic covariance and criterion.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        /// Measurement noise std per coordinate, m.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Re-evaluate and re-optimize the reference plans, flagging deviations.
    #[command(name = "reproduce-table1")]
    ReproduceTable1 {
        #[arg(long, default_value_t = 0.02)]
        tolerance_perf: f64,
        #[arg(long, default_value_t = 0.05)]
        tolerance_dk: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Evaluate { config, plan, output } => commands::cmd_evaluate(&config, plan.as_deref(), &output),
        Command::Optimize { config, m, starts, seed, output } => commands::cmd_optimize(&config, m, starts, seed, &output),
        Command::Simulate { config, plan, trials, sigma, seed, output } => {
            commands::cmd_simulate(&config, plan.as_deref(), trials, sigma, seed, &output)
        }
        Command::ReproduceTable1 { tolerance_perf, tolerance_dk, output } => {
            commands::cmd_reproduce_table1(tolerance_perf, tolerance_dk, &output)
        }
    }
}

/// Worker count from `STIFFCAL_THREADS`; `None` leaves the rayon default.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = threads_from_env().and_then(|threads| {
        if let Some(n) = threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?;
        }
        run(cli)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
