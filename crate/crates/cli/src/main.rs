use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qframe_cli::scenario::Overrides;
use qframe_cli::{emit_report, load_scenario, run_checks, Format, CHECKS};

/// Numerical checks for biquaternion frame geometry.
#[derive(Debug, Parser)]
#[command(name = "qframe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run checks on a scenario and print a report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Also write the JSON report here (`-` for stdout instead of the table).
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        /// Number of random sample points.
        #[arg(long, value_name = "N")]
        points: Option<usize>,
        #[arg(long, value_name = "H")]
        fd_step: Option<f64>,
        #[arg(long, value_name = "ORDER", value_parser = ["2", "4"])]
        fd_order: Option<String>,
        /// Use this tolerance for every check.
        #[arg(long, value_name = "T")]
        tol: Option<f64>,
        #[arg(long, value_delimiter = ',', value_name = "A,B,...")]
        checks: Option<Vec<String>>,
    },
    /// List the available checks and their default tolerances.
    ListChecks,
    /// Load a scenario and validate it at its sample points without running checks.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

const USAGE_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE_ERROR } else { 0 });
        }
    };
    match cli.command {
        Command::ListChecks => {
            let mut out = String::new();
            for c in CHECKS {
                let tol = c.tolerance.map_or("diagnostic".to_string(), |t| format!("{t:.0e}"));
                out += &format!("{:<26} {:>10}  {}\n", c.name, tol, c.description);
            }
            // A closed pipe (`| head`) is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Command::Validate { scenario } => match load_scenario(&scenario) {
            Ok(s) => {
                let n = s.sampling.explicit.len() + s.sampling.points;
                println!("{}: ok ({n} sample points)", s.name);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {}: {e}", scenario.display());
                ExitCode::from(USAGE_ERROR)
            }
        },
        Command::Run {
            scenario,
            json,
            seed,
            points,
            fd_step,
            fd_order,
            tol,
            checks,
        } => {
            let overrides = Overrides {
                seed,
                points,
                fd_step,
                fd_order: fd_order.map(|o| o.parse().expect("clap restricts the value")),
                tolerance: tol,
                checks,
            };
            let report = load_scenario(&scenario)
                .and_then(|mut s| overrides.apply(&mut s).map(|_| s))
                .and_then(|s| run_checks(&s));
            let report = match report {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {}: {e}", scenario.display());
                    return ExitCode::from(USAGE_ERROR);
                }
            };
            let to_stdout = json.as_deref().is_some_and(|p| p.as_os_str() == "-");
            if !to_stdout {
                if let Err(e) = emit_report(&report, Format::Text, None) {
                    eprintln!("error: {e}");
                    return ExitCode::from(USAGE_ERROR);
                }
            }
            if let Some(path) = &json {
                if let Err(e) = emit_report(&report, Format::Json, Some(path)) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(USAGE_ERROR);
                }
            }
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
