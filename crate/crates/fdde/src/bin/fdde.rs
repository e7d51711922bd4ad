use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fdde::cli::{apply_overrides, load_config, read_report, run_experiment, selftest, Overrides};
use fdde::solver::Method;

#[derive(Parser)]
#[command(
    name = "fdde",
    about = "Solve exponentially weighted fractional delay differential equations \
             and measure how fast their solutions forget initial data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        config: PathBuf,
        /// Override the solver step size.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the final time.
        #[arg(long = "T")]
        t_final: Option<f64>,
        /// Override the method (predictor_corrector | picard).
        #[arg(long)]
        method: Option<Method>,
        /// Override the probe seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the closed-form oracle suite and report pass/fail per check.
    Selftest {
        /// Fault-injection hook: offset added to gamma values under test.
        #[arg(long, hide = true, default_value_t = 0.0)]
        perturb_gamma: f64,
    },
    /// Re-print the report from a previous run's output directory.
    Report { output_dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, dt, t_final, method, seed } => {
            let mut parsed = match load_config(&config) {
                Ok(c) => c,
                Err(err) => {
                    eprintln!("error: {err}");
                    return ExitCode::FAILURE;
                }
            };
            apply_overrides(&mut parsed, &Overrides { dt, t_final, method, seed });
            match run_experiment(&parsed) {
                Ok(summary) => {
                    for path in &summary.trajectory_files {
                        println!("wrote {}", path.display());
                    }
                    println!("wrote {}", summary.pairwise_file.display());
                    println!("wrote {}", summary.report_file.display());
                    println!();
                    print!("{}", summary.report_text);
                    ExitCode::SUCCESS
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Selftest { perturb_gamma } => {
            let report = selftest(perturb_gamma);
            for check in &report.checks {
                let status = if check.passed { "ok  " } else { "FAIL" };
                println!("{status} {} — {}", check.name, check.detail);
            }
            if report.passed() {
                println!("selftest: all {} checks passed", report.checks.len());
                ExitCode::SUCCESS
            } else {
                let failed = report.checks.iter().filter(|c| !c.passed).count();
                println!("selftest: {failed} of {} checks FAILED", report.checks.len());
                ExitCode::FAILURE
            }
        }
        Command::Report { output_dir } => match read_report(&output_dir) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(err) => {
                eprintln!("error: {err}");
                ExitCode::FAILURE
            }
        },
    }
}
