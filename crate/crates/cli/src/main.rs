//! Command-line driver for the noncommutative Dirac invariant analysis.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_overrides, ConfigError, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Usage(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<ncdirac::Error> for CliError {
    fn from(e: ncdirac::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.0)
    }
}

#[derive(Parser)]
#[command(name = "ncdirac", version, about = "Invariant analysis of the Dirac equation in noncommutative phase space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Dirac algebra and the deformed commutators.
    VerifyAlgebra(Common),
    /// Evaluate the bracket constraints and the constant-coefficient nullspace.
    Invariant(Common),
    /// Integrate the phase functions and compare with the closed forms.
    Xi(Common),
    /// Propagate a Fock-space state and track the invariant.
    Evolve(Common),
    /// Summarise the outputs of the other commands.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parameter overrides, `--key value` or `--key=value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (common, f): (&Common, fn(&RunConfig) -> Result<bool, CliError>) = match &cli.command {
        Command::VerifyAlgebra(c) => (c, commands::verify_algebra),
        Command::Invariant(c) => (c, commands::invariant),
        Command::Xi(c) => (c, commands::xi),
        Command::Evolve(c) => (c, commands::evolve),
        Command::Report(c) => (c, commands::report),
    };
    let mut config_path = common.config.clone();
    let mut out = common.out.clone();
    let mut overrides = Vec::new();
    for (k, v) in parse_overrides(&common.overrides)? {
        match k.as_str() {
            "config" => config_path = Some(PathBuf::from(v)),
            "out" => out = Some(PathBuf::from(v)),
            _ => overrides.push((k, v)),
        }
    }
    let cfg = RunConfig::load(config_path.as_deref(), &overrides, out.as_deref())?;
    f(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
