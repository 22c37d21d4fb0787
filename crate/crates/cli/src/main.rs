//! `worldsheet`: scenario runner and verification suite.
//!
//! Exit codes: 0 success, 1 input or compute error, 2 tolerance violation.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use thiserror::Error;

use config::{ConfigError, ScenarioConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write report: {0}")]
    Write(#[from] std::io::Error),
    #[error("{0}")]
    Compute(String),
    #[error("`{command}` does not apply to `{scenario}`: {reason}")]
    Unsupported { command: &'static str, scenario: &'static str, reason: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Geometry,
    Invariants,
    Solve,
    Symplectic,
    Verify,
}

#[derive(Debug, Parser)]
#[command(name = "worldsheet", version, about = "Worldsheet geometry, invariants and covariant phase space")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Scenario configuration file; `verify` runs on defaults without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid size override (power of two, 16–512).
    #[arg(long)]
    grid: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for the random deformation fields.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &Args) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
            ScenarioConfig::parse(&text)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(n) = args.grid {
        cfg.grid = n;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<bool, CliError> {
    let cfg = load(args)?;
    let (outcome, file) = match args.command {
        Command::Geometry => (commands::geometry(&cfg)?, "geometry.csv"),
        Command::Invariants => (commands::invariants(&cfg)?, "invariants.csv"),
        Command::Solve => (commands::solve(&cfg)?, "solve.csv"),
        Command::Symplectic => (commands::symplectic(&cfg)?, "symplectic.csv"),
        Command::Verify => (commands::verify(&cfg)?, "verify.csv"),
    };
    let path = outcome.report.write(&cfg.out, file)?;
    if args.command == Command::Verify {
        print!("{}", summary(&outcome.report));
    }
    println!("{} -> {}", if outcome.passed { "ok" } else { "tolerance violated" }, path.display());
    Ok(outcome.passed)
}

/// Fixed-width rendering of the verification rows: name, value, tolerance, status.
fn summary(report: &report::Report) -> String {
    let idx = |h: &str| report.header.iter().position(|c| *c == h).expect("verify column");
    let (name, value, tol, status) = (idx("name"), idx("value"), idx("tolerance"), idx("status"));
    let text = |c: &report::Cell| match c {
        report::Cell::Text(s) => s.clone(),
        report::Cell::Int(i) => i.to_string(),
        report::Cell::Float(x) => format!("{x:.3e}"),
    };
    let mut out = format!("{:<36} {:>12} {:>12}  {}\n", "check", "value", "tolerance", "status");
    for r in &report.rows {
        out += &format!("{:<36} {:>12} {:>12}  {}\n", text(&r[name]), text(&r[value]), text(&r[tol]), text(&r[status]));
    }
    out
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
