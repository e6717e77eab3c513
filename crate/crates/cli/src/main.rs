//! `tsvar`: integrate, check and solve variational problems on time scales.
//!
//! Every command prints exactly one JSON document on stdout. Exit codes:
//! 0 success, 2 parse or input error, 3 evaluation error, 4 solver did not
//! converge, 5 verification raised a flag.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tsvar::Error;

#[derive(Parser)]
#[command(name = "tsvar", version, about = "Calculus of variations on unbounded time scales")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct Source {
    /// Problem file (JSON), or `corpus:ID` for a built-in problem.
    pub file: String,
    /// Sampling step on continuous pieces (overrides the file).
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Delta integral of the file's integrand over a window, or improper.
    Integrate {
        #[command(flatten)]
        src: Source,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        /// Classify `lim_{b -> inf} int_a^b f` instead of a finite window.
        #[arg(long, conflicts_with_all = ["from", "to"])]
        improper: bool,
        /// Comma-separated horizons for `--improper`.
        #[arg(long, value_delimiter = ',', requires = "improper")]
        horizons: Option<Vec<f64>>,
        /// Integrand expression in `t` (overrides the file).
        #[arg(long)]
        integrand: Option<String>,
    },
    /// Euler-Lagrange residual of a candidate on `[a, a + window]`.
    Residual {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        candidate: String,
        #[arg(long, default_value_t = 10.0)]
        window: f64,
        /// Write `t,r1,..,rn` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Full verification report for a candidate.
    Verify {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        candidate: String,
    },
    /// Direct solve of the problem truncated at `T`.
    Solve {
        #[command(flatten)]
        src: Source,
        #[arg(long = "T", allow_hyphen_values = true)]
        horizon: f64,
        /// `free` or `pinned=V1,V2,...`.
        #[arg(long, default_value = "free")]
        terminal: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write `t,x1,..,xn` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print a built-in problem as a problem file (no id: list the ids).
    Export {
        id: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub enum Failure {
    Input(String),
    Lib(Error),
    /// The command ran; its report is printed and the exit code flags it.
    Flagged(serde_json::Value, u8),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::InvalidProblem(_) | Error::InvalidTimeScale(_) => 2,
        Error::PartialsMismatch { .. } | Error::DimensionMismatch { .. } => 2,
        Error::MaxIterExceeded(_) | Error::NonFiniteObjective => 4,
        _ => 3,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("TSVAR_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn print(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Integrate {
            src,
            from,
            to,
            improper,
            horizons,
            integrand,
        } => commands::integrate(&src, from, to, improper, horizons, integrand),
        Command::Residual {
            src,
            candidate,
            window,
            csv,
        } => commands::residual(&src, &candidate, window, csv),
        Command::Verify { src, candidate } => commands::verify(&src, &candidate),
        Command::Solve {
            src,
            horizon,
            terminal,
            seed,
            csv,
        } => commands::solve(&src, horizon, &terminal, seed, csv),
        Command::Export { id, out } => commands::export(id, out),
    };
    match result {
        Ok(v) => {
            print(&v);
            ExitCode::SUCCESS
        }
        Err(Failure::Flagged(v, code)) => {
            print(&v);
            ExitCode::from(code)
        }
        Err(Failure::Input(msg)) => {
            print(&json!({ "error": { "kind": "input", "message": msg } }));
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            let code = exit_code(&e);
            let kind = match code {
                2 => "parse",
                4 => "non_convergence",
                _ => "evaluation",
            };
            print(&json!({ "error": { "kind": kind, "message": e.to_string() } }));
            ExitCode::from(code)
        }
    }
}
