use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use riskauction_cli::commands::{self, EXIT_INPUT, EXIT_OK};
use riskauction_cli::{CliError, Outcome};

/// Optimal auctions for risk-loving buyers: solve, verify, simulate.
#[derive(Debug, Parser)]
#[command(name = "riskauction", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print only the JSON report.
    #[arg(long, global = true)]
    json: bool,
    /// Slack allowed on BIC, IR, feasibility and dual constraints.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal mechanism in closed form; --out receives the mechanism file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a mechanism and its optimality gap.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        mechanism: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal revenue by linear programming.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Virtual values and their ironing.
    Iron {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quadratic utility example where a menu beats any posted price.
    Counterexample {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo revenue of a mechanism.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        mechanism: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    if !(cli.tolerance.is_finite() && cli.tolerance >= 0.0) {
        return Err(CliError::Input(format!("--tolerance must be a non-negative number, got {}", cli.tolerance)));
    }
    match cli.command {
        Command::Solve { instance, out } => commands::solve(&instance, out.as_deref()),
        Command::Verify { instance, mechanism, out } => {
            commands::verify(&instance, &mechanism, cli.tolerance, out.as_deref())
        }
        Command::Oracle { instance, out } => commands::oracle(&instance, out.as_deref()),
        Command::Iron { instance, out } => commands::iron(&instance, out.as_deref()),
        Command::Counterexample { out } => commands::counterexample(out.as_deref()),
        Command::Simulate { instance, mechanism, samples, seed, out } => {
            commands::simulate_cmd(&instance, &mechanism, samples, seed, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok(outcome) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&outcome.report).expect("reports serialize"));
            } else {
                for line in &outcome.summary {
                    println!("{line}");
                }
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
