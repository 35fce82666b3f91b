use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hedgecost_cli::run::{run_compare, run_scenario, run_validation};
use hedgecost_cli::scenario::{parse_scenario, Method, OutputKind, SCENARIO_HELP};
use hedgecost_cli::{CliError, Result};

/// Hedge costs for a large trader under illiquidity.
///
/// Exit status: 0 success (a diverged explicit run still succeeds and is
/// flagged in the CSV metadata), 1 I/O or failed validation checks,
/// 2 parse or domain errors, 3 no Newton convergence, 4 singular denominator.
#[derive(Parser)]
#[command(name = "hedgecost", version, after_long_help = SCENARIO_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Args)]
struct Common {
    /// Scenario file in flat `key = value` format.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, env = "HEDGECOST_OUT_DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario with its method and write the listed outputs.
    Price(Common),
    /// Evaluate the closed-form member given in the scenario.
    ClosedForm(Common),
    /// Write Greeks for the scenario's method.
    Greeks(Common),
    /// Run named validation checks and write a key=value report.
    Validate {
        /// Check name, comma list, or `all`. Overrides the scenario.
        #[arg(long)]
        check: Option<String>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, env = "HEDGECOST_OUT_DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Nonlinear against linear Black-Scholes on one grid at t = 0.
    Compare(Common),
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Price(c) => {
            let s = parse_scenario(&c.scenario)?;
            report(&run_scenario(&s, s.method, "price", &c.out)?);
        }
        Command::ClosedForm(c) => {
            let mut s = parse_scenario(&c.scenario)?;
            if s.closed_form.is_none() {
                return Err(CliError::field("closed_form.m", "required for the closed-form command"));
            }
            s.outputs.retain(|o| *o != OutputKind::Validation);
            report(&run_scenario(&s, Method::ClosedForm, "closed-form", &c.out)?);
        }
        Command::Greeks(c) => {
            let mut s = parse_scenario(&c.scenario)?;
            s.outputs = vec![OutputKind::Greeks];
            report(&run_scenario(&s, s.method, "greeks", &c.out)?);
        }
        Command::Validate { check, scenario, out } => {
            let (name, checks) = match scenario {
                Some(p) => {
                    let s = parse_scenario(&p)?;
                    (s.name, s.checks)
                }
                None => ("validation".to_string(), "all".to_string()),
            };
            let checks = check.unwrap_or(checks);
            let path = Path::new(&out).join(format!("{name}_validation.txt"));
            report(&[run_validation(&checks, &path)?]);
        }
        Command::Compare(c) => {
            let s = parse_scenario(&c.scenario)?;
            report(&[run_compare(&s, &c.out)?]);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
