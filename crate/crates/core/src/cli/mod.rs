//! Command-line runner: one subcommand per check, JSON config in, CSV and JSON
//! summary out.
//!
//! Exit codes: 0 when every contract holds, 1 when a contract or a checked
//! hypothesis fails, 2 when the config or its arguments are unusable.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::error::{Error, Result};
use config::{load, ConfigError};
use output::{write_outcome, Outcome};

#[derive(Debug, Parser)]
#[command(name = "wfs", version, about = "Weighted Fefferman–Stein experiments on uniform grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON config for the subcommand.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "wfs-out")]
    pub out: PathBuf,
    /// Also write an SVG line chart.
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the dyadic filtration properties of a lattice.
    LatticeValidate(Common),
    /// Family estimate of the A_p characteristic of a weight.
    ApConstant(Common),
    /// Weighted Hardy–Littlewood ratios, optionally with dyadic vs ball comparison.
    MaximalBound(Common),
    /// Fefferman–Stein ratios ‖f‖/‖f#‖ over a seeded suite.
    FsCheck(Common),
    /// Fefferman–Stein ratios through local majorants.
    GfsCheck(Common),
    /// Stopping-time structure and the level-set bound.
    Levelset(Common),
    /// Rubio de Francia properties, constructed weights and the transfer check.
    Extrapolate(Common),
    /// A priori estimate ratios for model parabolic operators.
    PdeRatio(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::LatticeValidate(_) => "lattice-validate",
            Command::ApConstant(_) => "ap-constant",
            Command::MaximalBound(_) => "maximal-bound",
            Command::FsCheck(_) => "fs-check",
            Command::GfsCheck(_) => "gfs-check",
            Command::Levelset(_) => "levelset",
            Command::Extrapolate(_) => "extrapolate",
            Command::PdeRatio(_) => "pde-ratio",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::LatticeValidate(c)
            | Command::ApConstant(c)
            | Command::MaximalBound(c)
            | Command::FsCheck(c)
            | Command::GfsCheck(c)
            | Command::Levelset(c)
            | Command::Extrapolate(c)
            | Command::PdeRatio(c) => c,
        }
    }
}

/// Failure classes that mean the computation ran and a checked property failed.
pub fn is_contract_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::Invariant(_) | Error::Coverage(_) | Error::Precondition(_) | Error::Divergence(_) | Error::Degenerate(_)
    )
}

enum Failure {
    Config(ConfigError),
    Run(Error),
}

fn with<T: DeserializeOwned>(path: &Path, f: impl FnOnce(&T) -> Result<Outcome>) -> std::result::Result<Outcome, Failure> {
    let cfg: T = load(path).map_err(Failure::Config)?;
    f(&cfg).map_err(Failure::Run)
}

fn dispatch(cmd: &Command) -> std::result::Result<Outcome, Failure> {
    use commands::*;
    let path = &cmd.common().config;
    match cmd {
        Command::LatticeValidate(_) => with(path, lattice_validate),
        Command::ApConstant(_) => with(path, ap_constant),
        Command::MaximalBound(_) => with(path, maximal_bound),
        Command::FsCheck(_) => with(path, fs_check),
        Command::GfsCheck(_) => with(path, gfs_check),
        Command::Levelset(_) => with(path, levelset),
        Command::Extrapolate(_) => with(path, extrapolate),
        Command::PdeRatio(_) => with(path, pde_ratio),
    }
}

/// Runs one parsed command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cmd = &cli.command;
    let name = cmd.name();
    let common = cmd.common();
    let outcome = match dispatch(cmd) {
        Ok(o) => o,
        Err(Failure::Config(e)) => {
            eprintln!("{name}: {e}");
            return 2;
        }
        Err(Failure::Run(e)) => {
            eprintln!("{name}: {e}");
            return if is_contract_failure(&e) { 1 } else { 2 };
        }
    };
    let summary = match write_outcome(&common.out, name, &outcome, common.plots) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{name}: {e}");
            return 2;
        }
    };
    if outcome.passed {
        println!("{name}: passed ({} rows) -> {}", outcome.rows.len(), summary.display());
        0
    } else {
        eprintln!("{name}: contract failed, see {}", summary.display());
        1
    }
}

/// Parses `args` (program name first) and runs.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
