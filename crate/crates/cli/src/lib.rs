//! Command-line front end for `roomem`: evaluate model curves, run the
//! mirror-source simulator, fit measured PDPs and tabulate CPR versus
//! distance. Output is plot-ready CSV.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use roomem::Execution;

use crate::commands::TraceSource;
use crate::config::RunConfig;
pub use crate::error::{CliError, CliResult};

/// Environment variable capping the simulator's worker threads.
pub const WORKERS_ENV: &str = "ROOMEM_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "roomem",
    version,
    about = "Polarimetric room channel model toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Model curves on the configured delay grid.
    Eval(Common),
    /// Mirror-source simulation beside the model.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Overrides simulate.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; also read from ROOMEM_WORKERS.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Fit measured co- and cross-channel PDPs (dB).
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        co: PathBuf,
        #[arg(long)]
        cross: PathBuf,
        /// Value column in the co file (default: second column).
        #[arg(long)]
        co_column: Option<String>,
        /// Value column in the cross file (default: second column).
        #[arg(long)]
        cross_column: Option<String>,
    },
    /// CPR versus distance for NLOS and LOS links.
    Cpr(Common),
}

fn execution(workers: Option<usize>) -> CliResult<Execution> {
    let from_env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| {
                    CliError::Config(format!("{WORKERS_ENV}: {v:?} is not a positive integer"))
                })?,
        ),
        Err(_) => None,
    };
    match workers.or(from_env) {
        Some(0) => Err(CliError::Config("--workers: must be positive".into())),
        Some(workers) => Ok(Execution::ParallelWith { workers }),
        None => Ok(Execution::Parallel),
    }
}

/// Runs one command and returns the text for standard output.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Eval(c) => {
            let cfg = RunConfig::load(&c.config)?;
            Ok(commands::eval(&cfg, &c.out)?.to_string())
        }
        Command::Simulate {
            common,
            seed,
            workers,
        } => {
            let mut cfg = RunConfig::load(&common.config)?;
            if let (Some(seed), Some(sim)) = (seed, cfg.simulate.as_mut()) {
                sim.seed = seed;
            }
            let exec = execution(workers)?;
            Ok(commands::simulate(&cfg, &common.out, exec)?.to_string())
        }
        Command::Fit {
            common,
            co,
            cross,
            co_column,
            cross_column,
        } => {
            let cfg = RunConfig::load(&common.config)?;
            let (report, result) = commands::fit_traces(
                &cfg,
                TraceSource {
                    path: &co,
                    column: co_column.as_deref(),
                },
                TraceSource {
                    path: &cross,
                    column: cross_column.as_deref(),
                },
                &common.out,
            )?;
            if cfg.fit_settings()?.strict && !result.converged {
                print!("{report}");
                return Err(CliError::NotConverged {
                    iterations: result.iterations,
                });
            }
            Ok(report.to_string())
        }
        Command::Cpr(c) => {
            let cfg = RunConfig::load(&c.config)?;
            Ok(commands::cpr_sweep(&cfg, &c.out)?.to_string())
        }
    }
}
