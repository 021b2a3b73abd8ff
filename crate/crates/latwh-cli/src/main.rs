//! Config-driven runner for the staggered-defect scattering pipelines.
//!
//! Exit codes: 0 on success, 1 on a numeric failure, 2 on a configuration
//! error. Failures emit a machine-readable JSON object on stderr.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) => m,
        }
    }

    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numeric(_) => ExitCode::from(1),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "latwh",
    about = "Lattice-wave scattering by staggered semi-infinite defects: reduced Wiener-Hopf solver, field synthesis, and a direct grid oracle"
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "latwh.toml")]
    config: PathBuf,
    /// Override the configured defect kind.
    #[arg(long, global = true, value_enum)]
    kind: Option<config::KindConfig>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factorize a scalar kernel and emit its coefficient tables.
    Factorize {
        #[arg(long, value_enum)]
        function: commands::FactorFunction,
        /// Override the separation exponent N used for alpha/beta.
        #[arg(long)]
        n_power: Option<i64>,
        /// Also dump the per-node symbol table.
        #[arg(long)]
        dump_nodes: bool,
    },
    /// Solve the reduced system and emit the segment unknowns.
    Solve,
    /// Solve, synthesize the scattered field on the output window, and emit
    /// field plus segment tables.
    Field,
    /// Direct truncated-grid solve with the same output schemas.
    Oracle,
    /// Compare two CSV tables (field or segment schema) site by site.
    Compare {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Optional per-site error table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite on the configured scenario.
    Checks,
}

fn run(cli: &Cli) -> Result<serde_json::Value, CliError> {
    match &cli.command {
        Command::Compare { left, right, out } => {
            commands::run_compare(left, right, out.as_deref())
        }
        other => {
            let mut cfg = config::RunConfig::load(&cli.config)?;
            if let Some(kind) = cli.kind {
                cfg.scenario.kind = kind;
            }
            match other {
                Command::Factorize {
                    function,
                    n_power,
                    dump_nodes,
                } => commands::run_factorize(&cfg, *function, *n_power, *dump_nodes),
                Command::Solve => commands::run_solve(&cfg),
                Command::Field => commands::run_field(&cfg),
                Command::Oracle => commands::run_oracle(&cfg),
                Command::Checks => commands::run_checks(&cfg),
                Command::Compare { .. } => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            if let Command::Checks = cli.command {
                if !commands::checks_passed(&summary) {
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": { "kind": e.kind(), "message": e.message() } })
            );
            e.exit_code()
        }
    }
}
