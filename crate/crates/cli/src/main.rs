use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mpoc_cli::commands;
use mpoc_cli::config::RunConfig;
use mpoc_cli::CliError;

/// Mediated probabilities of causation: simulation harness, identification
/// checks, and doubly-robust estimation.
#[derive(Parser)]
#[command(name = "mpoc", version, about)]
struct Cli {
    /// JSON configuration file; defaults apply for every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (overrides the configuration file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the configuration file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print the fully resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated simulation study; writes table1.csv and a rendered table.
    Table1,
    /// Nuisance, estimand, and projection curves; writes three CSV files.
    Figures,
    /// Exact-enumeration identification check (pass/fail).
    OracleCheck,
    /// Doubly-robust projection estimation on an observed dataset.
    Estimate {
        /// CSV with columns x (repeatable or x1..xd), a, m, y.
        #[arg(long)]
        data: PathBuf,
    },
    /// Simulation study with a custom configuration; writes simulate.csv.
    Simulate,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply_overrides(cli.seed, cli.out, cli.threads);
    if cli.print_config {
        println!("{}", cfg.resolved_json());
        return Ok(());
    }
    match cli.command {
        Command::Table1 => commands::cmd_table1(&cfg).map(|_| ()),
        Command::Figures => commands::cmd_figures(&cfg),
        Command::OracleCheck => commands::cmd_oracle_check(&cfg),
        Command::Estimate { data } => commands::cmd_estimate(&cfg, &data).map(|_| ()),
        Command::Simulate => commands::cmd_simulate(&cfg).map(|_| ()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
