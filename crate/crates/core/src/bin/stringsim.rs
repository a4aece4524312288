use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stringsim::acceptance::run_acceptance;
use stringsim::couplings::calibrate_default;
use stringsim::scenario::{run_scenario, run_thermal, RunOptions, Scenario, ScenarioReport};
use stringsim::Error;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "stringsim",
    version,
    about = "Confinement and string-breaking simulator"
)]
struct Cli {
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; overrides STRINGSIM_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs a scenario file and writes maps, fits and a manifest.
    Run { config: PathBuf },
    /// Runs the acceptance suite; exits 1 if any criterion fails.
    Accept {
        /// Also write the JSON report to this path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Synthesizes the trapped-ion coupling matrix and prints the report.
    Calibrate,
    /// Computes only the thermal baseline of a scenario.
    Thermal { config: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Scenario { source, .. } => exit_code(source),
        _ => EXIT_FAIL,
    }
}

fn print_report(report: &ScenarioReport) {
    for p in &report.points {
        println!(
            "g/J={} h/J={} -> {}",
            p.g_over_j,
            p.h_over_j,
            p.directory.display()
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        seed: cli.seed,
        out: cli.out,
        threads: cli.threads,
    };
    let result = match cli.command {
        Command::Run { config } => Scenario::from_path(&config)
            .and_then(|s| run_scenario(&s, &opts))
            .map(|r| print_report(&r)),
        Command::Thermal { config } => Scenario::from_path(&config)
            .and_then(|s| run_thermal(&s, &opts))
            .map(|r| print_report(&r)),
        Command::Calibrate => calibrate_default().and_then(|r| {
            println!("{}", serde_json::to_string_pretty(&r)?);
            Ok(())
        }),
        Command::Accept { report } => {
            let rep = run_acceptance();
            for c in &rep.criteria {
                println!("{}", c.line());
            }
            let written = match report {
                Some(path) => rep.to_json().and_then(|j| Ok(std::fs::write(path, j)?)),
                None => Ok(()),
            };
            match written {
                Err(e) => Err(e),
                Ok(()) if rep.all_passed() => Ok(()),
                Ok(()) => {
                    eprintln!("failed criteria: {}", rep.failed().join(", "));
                    return ExitCode::from(EXIT_FAIL);
                }
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
