//! `qtraj run|born|postselect|collapse --scenario <path> --out <dir>`
//!
//! Exit codes: 0 on success, 2 on a validation error, 3 on an I/O error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, Result};
use crate::output::Meta;
use crate::scenario::Scenario;

#[derive(Parser)]
#[command(name = "qtraj", version, about = "Forward-backward phase-space trajectory experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate an ensemble and write paths, per-time moments and marginals.
    Run(Args),
    /// Compare x̂ and p̂ measurement histograms with the Born densities.
    Born(Args),
    /// Sign-postselected variances and uncertainty products.
    Postselect(Args),
    /// Meter correlation and the inferred state of system A.
    Collapse(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides run.trajectories.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "QTRAJ_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qtraj: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

type Command = fn(&Scenario, &std::path::Path, &Meta) -> Result<()>;

fn dispatch(cmd: Cmd) -> Result<()> {
    let (args, f): (Args, Command) = match cmd {
        Cmd::Run(a) => (a, commands::run),
        Cmd::Born(a) => (a, commands::born),
        Cmd::Postselect(a) => (a, commands::postselect),
        Cmd::Collapse(a) => (a, commands::collapse),
    };
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let mut sc = Scenario::load(&args.scenario)?;
    if let Some(n) = args.trajectories {
        if n == 0 {
            return Err(CliError::Usage("--trajectories must be at least 1".into()));
        }
        sc.trajectories = n;
    }
    if let Some(s) = args.seed {
        sc.seed = s;
    }
    std::fs::create_dir_all(&args.out).map_err(CliError::io(&args.out))?;
    let meta = Meta { sha256: sc.sha256.clone(), seed: sc.seed, trajectories: sc.trajectories };
    f(&sc, &args.out, &meta)
}
