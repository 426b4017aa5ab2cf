//! Command-line front end for the `blob-econ` models.
//!
//! Every subcommand reads a TOML scenario (see [`scenario`]), prints a table
//! and optionally writes CSV. Exit codes are listed in [`error::exit`].

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{BargainFlags, SimFlags, SweepRange};
use crate::error::{exit, CliError, Result};
use crate::output::Report;
use crate::scenario::load_scenario;

#[derive(Debug, Parser)]
#[command(name = "blob-econ", version, about = "Blob fee market model: posting policies, equilibrium, merging, bargaining")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    pub scenario: PathBuf,
    /// Also write the result as CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Best posting policy of every rollup at one blob price.
    Policy {
        #[command(flatten)]
        common: Common,
        /// Blob price to use instead of the equilibrium price.
        #[arg(long, value_name = "X")]
        blob_price: Option<f64>,
    },
    /// Clearing blob price and participation threshold.
    Equilibrium {
        #[command(flatten)]
        common: Common,
    },
    /// Reprice the market when two rollups share blobs.
    Merge {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        merge: Option<Vec<String>>,
    },
    /// Nash bargaining split of a shared blob.
    Bargain {
        #[command(flatten)]
        common: Common,
        /// Rate of the small rollup relative to the large one.
        #[arg(long = "f", value_name = "X")]
        ratio: Option<f64>,
        /// Blob price before the merge.
        #[arg(long, value_name = "B")]
        price: Option<f64>,
        /// Blob price after the merge.
        #[arg(long, value_name = "BN")]
        new_price: Option<f64>,
        /// Rate of the large rollup (defaults to the largest scenario rate).
        #[arg(long, value_name = "R")]
        rate: Option<f64>,
    },
    /// Discrete-event replay of one rollup's posting policy.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        #[arg(long, value_name = "T")]
        horizon: Option<f64>,
    },
    /// Repeat an analysis over a parameter range, one row per point.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 4, value_names = ["FIELD", "LO", "HI", "STEP"], required = true)]
        sweep: Vec<String>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Policy { common, .. }
            | Command::Equilibrium { common }
            | Command::Merge { common, .. }
            | Command::Bargain { common, .. }
            | Command::Simulate { common, .. }
            | Command::Sweep { common, .. } => common,
        }
    }
}

fn parse_range(args: &[String]) -> Result<SweepRange> {
    let num = |name: &str, s: &str| {
        s.parse::<f64>().map_err(|_| CliError::Validation(format!("--sweep {name}: `{s}` is not a number")))
    };
    match args {
        [field, lo, hi, step] => Ok(SweepRange {
            field: field.parse()?,
            lo: num("LO", lo)?,
            hi: num("HI", hi)?,
            step: num("STEP", step)?,
        }),
        _ => Err(CliError::Validation("--sweep takes FIELD LO HI STEP".into())),
    }
}

/// Runs one command and returns its report.
pub fn execute(command: &Command, notices: &mut impl Write) -> Result<Report> {
    let scenario = load_scenario(&command.common().scenario)?;
    for n in &scenario.notices {
        let _ = writeln!(notices, "note: {n}");
    }
    match command {
        Command::Policy { blob_price, .. } => commands::policy(&scenario, *blob_price),
        Command::Equilibrium { .. } => commands::equilibrium(&scenario),
        Command::Merge { merge, .. } => {
            commands::merge(&scenario, merge.as_deref().map(|m| (m[0].clone(), m[1].clone())))
        }
        Command::Bargain { ratio, price, new_price, rate, .. } => commands::bargain(
            &scenario,
            BargainFlags { ratio: *ratio, price: *price, new_price: *new_price, rate: *rate },
        ),
        Command::Simulate { seed, horizon, .. } => {
            commands::simulate_cmd(&scenario, SimFlags { seed: *seed, horizon: *horizon })
        }
        Command::Sweep { sweep, .. } => commands::sweep(&scenario, parse_range(sweep)?),
    }
}

/// Runs the command, prints the outcome and returns the process exit code.
pub fn run(cli: &Cli, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let result = execute(&cli.command, err)
        .and_then(|report| report.emit(out, cli.command.common().csv.as_deref()).map(|()| report));
    match result {
        Ok(Report { verdict: Some(v), .. }) => {
            let _ = writeln!(err, "{v}");
            exit::NO_DEAL
        }
        Ok(_) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
