//! Command-line pipeline: ingest → features → grade → report.

pub mod config;
pub mod error;
pub mod render;

mod commands;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cefrscore", version, about = "CEFR analytic essay scoring and evaluation")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Load and validate the corpus (and predictions); write a normalized copy
    Ingest,
    /// Extract the nine linguistic features to features.csv
    Features,
    /// Grade every essay on the nine aspects for each configured condition
    Grade,
    /// Aspect × feature Spearman correlation tables
    Correlate,
    /// Correlation of mean aspect score with holistic references
    Reconstruct,
    /// Friedman test and Nemenyi post-hoc comparison across aspects
    Friedman,
    /// Essays whose aspect scores span at least the configured gap
    InspectDiscrepancies,
    /// All report artefacts: correlate, reconstruct, friedman, inspect-discrepancies
    Report,
}

pub fn execute(command: Command, config: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Ingest => commands::ingest(config),
        Command::Features => commands::features(config),
        Command::Grade => commands::grade(config),
        Command::Correlate => commands::correlate(config),
        Command::Reconstruct => commands::reconstruct(config),
        Command::Friedman => commands::friedman_cmd(config),
        Command::InspectDiscrepancies => commands::inspect_discrepancies(config),
        Command::Report => commands::report(config),
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    match RunConfig::from_overrides(&cli.overrides).and_then(|config| execute(cli.command, &config)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cefrscore: {e}");
            e.exit_code()
        }
    }
}
