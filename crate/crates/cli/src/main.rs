mod config;
mod experiments;
mod locate;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use experiments::{RunArgs, RunError, EXPERIMENTS};

#[derive(Parser)]
#[command(name = "ebound", version, about = "Probe error bounds of structured convex problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write samples.csv, loglog.csv, fit.json and summary.txt.
    Run {
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Ray segment for the noncompact experiment, e.g. -50..0.
        #[arg(long, allow_hyphen_values = true, value_parser = experiments::parse_range)]
        x_range: Option<(f64, f64)>,
        /// Height of the ray for the noncompact experiment.
        #[arg(long)]
        y: Option<f64>,
    },
    /// Check a config file and report every problem found.
    Validate { path: PathBuf },
    /// List the available experiments.
    List,
}

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::List => {
            for (name, about) in EXPERIMENTS {
                println!("{name:<16} {about}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { path } => match config::validate_config(&path) {
            Ok(c) => {
                println!("{}: ok (experiment {})", path.display(), c.experiment);
                ExitCode::SUCCESS
            }
            Err(errors) => {
                for e in &errors {
                    eprintln!("{}: {e}", path.display());
                }
                ExitCode::from(USAGE)
            }
        },
        Command::Run { experiment, config, out, seed, x_range, y } => {
            let config = match config.as_deref().map(config::validate_config).transpose() {
                Ok(c) => c,
                Err(errors) => {
                    let path = config.as_deref().map(|p| p.display().to_string()).unwrap_or_default();
                    for e in &errors {
                        eprintln!("{path}: {e}");
                    }
                    return ExitCode::from(USAGE);
                }
            };
            let dir = report::output_dir(&experiment, out.as_deref(), config.as_ref().and_then(|c| c.output.as_deref()));
            let args = RunArgs { seed, x_range, y, config };
            let outcome = match experiments::run(&experiment, &args) {
                Ok(o) => o,
                Err(RunError::Usage(m)) => {
                    eprintln!("error: {m}");
                    return ExitCode::from(USAGE);
                }
                Err(RunError::Failed(m)) => {
                    eprintln!("error: {experiment} failed: {m}");
                    return ExitCode::from(FAILURE);
                }
            };
            if let Err(e) = report::write_all(&dir, &outcome) {
                eprintln!("error: cannot write to {}: {e}", dir.display());
                return ExitCode::from(FAILURE);
            }
            print!("{}", report::summary_txt(&outcome));
            println!("output: {}", dir.display());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                eprint!("{experiment}: checks failed\n{}", report::diff_report(&outcome));
                ExitCode::from(FAILURE)
            }
        }
    }
}
