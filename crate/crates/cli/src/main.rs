//! `mvc`: mean value coordinates, derivatives, deformation, validation and
//! the variational solve from the command line.

mod commands;
mod error;
mod io;
mod json;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "mvc", version, about = "Mean value coordinates on closed triangular cages")]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every command; each flag can also come from the
/// matching `MVC_*` environment variable.
#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Support-plane tolerance, relative to the triangle's mean edge.
    #[arg(long, global = true, env = "MVC_EPS_PLANE", default_value_t = 1e-9, value_parser = positive)]
    pub eps_plane: f64,
    /// Angle below which kernels use their series.
    #[arg(long, global = true, env = "MVC_EPS_THETA", default_value_t = 1e-3, value_parser = positive)]
    pub eps_theta: f64,
    /// Plane-expansion wedge: offset / distance-to-triangle below this ratio.
    #[arg(long, global = true, env = "MVC_EPS_SWITCH", default_value_t = 1e-3, value_parser = positive)]
    pub eps_switch: f64,
    /// Gradient finite-difference step for `validate`, relative to the diagonal.
    #[arg(long, global = true, env = "MVC_FD_H", default_value_t = 1e-5, value_parser = fd_step)]
    pub fd_h: f64,
    /// Worker threads: a count or `auto`.
    #[arg(long, global = true, env = "MVC_THREADS", default_value = "auto", value_parser = threads)]
    pub threads: usize,
    /// Sampling seed for `validate`.
    #[arg(long, global = true, env = "MVC_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Write the main output here instead of standard output.
    #[arg(long, global = true, env = "MVC_OUT")]
    pub out: Option<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn fd_step(s: &str) -> Result<f64, String> {
    match positive(s)? {
        x if x < 1e-2 => Ok(x),
        _ => Err(format!("finite-difference step `{s}` must be below 1e-2")),
    }
}

/// `auto` maps to 0, rayon's "one per core".
fn threads(s: &str) -> Result<usize, String> {
    if s == "auto" {
        return Ok(0);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("`{s}` is neither a positive count nor `auto`")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Coordinates of every point of a points file.
    Weights { cage: PathBuf, points: PathBuf },
    /// Coordinates with gradients (order 1) and Hessians (order 2).
    Derivs {
        cage: PathBuf,
        points: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: u8,
    },
    /// Moves the vertices of a mesh embedded in the cage.
    Deform {
        cage: PathBuf,
        deformed_cage: PathBuf,
        mesh: PathBuf,
    },
    /// Runs the oracle suites; exits with 2 if any tolerance is breached.
    Validate {
        cage: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Solves for the deformed cage meeting a constraints file.
    Solve {
        cage: PathBuf,
        constraints: PathBuf,
        /// Where to write the residual report (standard error otherwise).
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.config.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))?;
    let cfg = cli.config;
    pool.install(|| match cli.command {
        Command::Weights { cage, points } => commands::weights(&cfg, &cage, &points),
        Command::Derivs { cage, points, order } => commands::derivs(&cfg, &cage, &points, order),
        Command::Deform {
            cage,
            deformed_cage,
            mesh,
        } => commands::deform(&cfg, &cage, &deformed_cage, &mesh),
        Command::Validate { cage, samples } => commands::validate(&cfg, &cage, samples),
        Command::Solve {
            cage,
            constraints,
            report,
        } => commands::solve(&cfg, &cage, &constraints, report.as_deref()),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mvc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
