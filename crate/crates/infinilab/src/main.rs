//! Thin batch CLI over the library's run driver.
//!
//! ```text
//! infinilab <solve|eigen|kpp|liouville|oracle-check> \
//!     [--config run.toml] [--out dir] [--workers n] [--seed k]
//! ```
//!
//! Without `--config`, each command runs its built-in default configuration.
//! Exit codes: 0 success, 2 validation error, 3 solver divergence,
//! 4 certificate failure, 1 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use infinilab::config::{CommandName, RunConfig};
use infinilab::driver;

#[derive(Parser)]
#[command(
    name = "infinilab",
    version,
    about = "Numerical laboratory for degenerate infinity-Laplacian operators with gradient drift"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration; defaults to the command's built-in config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory (overrides the config's output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Thread count; any value produces byte-identical artifacts.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for randomized cross-check sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Solve a Dirichlet problem for the degenerate operator.
    Solve,
    /// Bracket a principal Dirichlet eigenvalue.
    Eigen,
    /// Compute KPP steady states on a ball or a whole-space exhaustion.
    Kpp,
    /// Run a rigidity-certificate experiment.
    Liouville,
    /// Validate the discretization against closed-form radial profiles.
    OracleCheck,
}

impl From<Cmd> for CommandName {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => CommandName::Solve,
            Cmd::Eigen => CommandName::Eigen,
            Cmd::Kpp => CommandName::Kpp,
            Cmd::Liouville => CommandName::Liouville,
            Cmd::OracleCheck => CommandName::OracleCheck,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command: CommandName = cli.command.into();

    let loaded = match &cli.config {
        None => RunConfig::default_for_env(command, std::env::vars()),
        Some(path) => RunConfig::load(path),
    };
    let cfg = match loaded {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("infinilab: {e}");
            return ExitCode::from(2);
        }
    };
    if cfg.command != command {
        eprintln!(
            "infinilab: config names command '{}' but '{command}' was invoked",
            cfg.command
        );
        return ExitCode::from(2);
    }

    match driver::run(&cfg, cli.out.as_deref(), cli.workers, cli.seed) {
        Ok(outcome) => {
            if command == CommandName::OracleCheck {
                print_table(&outcome);
            }
            if let Ok(pretty) = serde_json::to_string_pretty(&outcome.summary) {
                println!("{pretty}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("infinilab: {e}");
            ExitCode::from(e.exit_code().clamp(0, 255) as u8)
        }
    }
}

fn print_table(outcome: &driver::RunOutcome) {
    for f in &outcome.files {
        if f.file_name().is_some_and(|n| n.to_string_lossy().ends_with(".csv")) {
            if let Ok(text) = std::fs::read_to_string(f) {
                print!("{text}");
            }
        }
    }
}
