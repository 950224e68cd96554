use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mesoc::cli::{self, CommandOutcome, PortfolioArgs, SolveArgs};

#[derive(Parser)]
#[command(name = "mesoc", version, about = "Complementarity problems on the monotone extended second order cone")]
struct Cli {
    /// Print a plain-text summary instead of JSON.
    #[arg(long, global = true)]
    human: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance with multi-start semismooth Newton.
    Solve {
        instance: PathBuf,
        /// Stopping tolerance on the infinity norm of the residual.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 20)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the best run's iteration records to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check a candidate point against an instance.
    Certify {
        instance: PathBuf,
        candidate: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Write an instance with a planted solution, plus a `.planted.json` sidecar.
    Generate {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form portfolio weights from a returns CSV.
    Portfolio {
        csv: PathBuf,
        #[arg(long)]
        c0: f64,
        /// const:X, linear:X, or a comma-separated list with one entry per period.
        #[arg(long, default_value = "const:1")]
        f: String,
        /// fixed:K (1-based period), given-w, or fixed-point.
        #[arg(long, default_value = "fixed:1")]
        jstar: String,
        /// Comma-separated mean returns; computed from the panel when absent.
        #[arg(long)]
        means: Option<String>,
    },
}

fn run(cli: &Cli, echo: &[String]) -> mesoc::Result<CommandOutcome> {
    match &cli.command {
        Command::Solve {
            instance,
            tol,
            max_iter,
            starts,
            seed,
            trace,
        } => {
            let args = SolveArgs {
                instance: instance.clone(),
                tol: *tol,
                max_iter: *max_iter,
                starts: *starts,
                seed: *seed,
                trace_out: trace.clone(),
            };
            cli::cmd_solve(&args, echo)
        }
        Command::Certify {
            instance,
            candidate,
            tol,
        } => cli::cmd_certify(instance, candidate, *tol, echo),
        Command::Generate { p, q, seed, out } => cli::cmd_generate(*p, *q, *seed, out, echo),
        Command::Portfolio {
            csv,
            c0,
            f,
            jstar,
            means,
        } => {
            let args = PortfolioArgs {
                csv: csv.clone(),
                c0: *c0,
                f_spec: f.clone(),
                jstar: jstar.clone(),
                means: means.clone(),
            };
            cli::cmd_portfolio(&args, echo)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("MESOC_LOG")).init();
    let echo: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run(&cli, &echo) {
        Ok(outcome) => {
            let text = if cli.human {
                outcome.report.render_human()
            } else {
                match outcome.report.to_json() {
                    Ok(text) => text + "\n",
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(cli::EXIT_INPUT as u8);
                    }
                }
            };
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code_for(&e) as u8)
        }
    }
}
