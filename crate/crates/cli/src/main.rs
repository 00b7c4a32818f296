//! `smolyak`: command-line front end for randomized Smolyak quadrature on
//! scrambled nets and its Haar-wavelet error analysis.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Randomized Smolyak quadrature on scrambled (0,m,s)-nets.
#[derive(Debug, Parser)]
#[command(name = "smolyak", version, about)]
struct Cli {
    /// Worker threads for replications (default: all cores). Output does not
    /// depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit a deterministic (0,m,s)-net as CSV.
    GenerateNet(GenerateNetArgs),
    /// Exhaustively check that a CSV point set is a (0,m,s)-net.
    CheckNet(CheckNetArgs),
    /// Emit scrambled copies of a net as CSV, one block per replication.
    Scramble(ScrambleArgs),
    /// Dump the nodes and weights of one Smolyak realization as CSV.
    SmolyakNodes(NodesArgs),
    /// Integrate a built-in integrand over independent replications (JSON).
    Integrate(IntegrateArgs),
    /// Evaluate one Haar wavelet at points read from CSV.
    WaveletEval(WaveletEvalArgs),
    /// Canonical Haar coefficients of a function constant on grid cells.
    WaveletCoeffs(WaveletCoeffsArgs),
    /// Second moment of one building block applied to a wavelet (JSON).
    Moments(MomentsArgs),
    /// Experiments on the randomized error.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Debug, Subcommand)]
enum Experiment {
    /// Randomized error over a range of levels, with rate fits.
    Convergence(ConvergenceArgs),
}

/// Seed and output shared by most subcommands.
#[derive(Debug, Clone, Args, Serialize)]
struct Common {
    /// Master seed.
    #[arg(long, env = "SMOLYAK_SEED", default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GenerateNetArgs {
    #[arg(long = "base", short = 'b')]
    base: u32,
    #[arg(long, short = 'm')]
    level: u32,
    #[arg(long, short = 's')]
    dim: usize,
    /// Net construction.
    #[arg(long, default_value = "faure")]
    generator: String,
    /// Output file (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct CheckNetArgs {
    #[arg(long = "base", short = 'b')]
    base: u32,
    #[arg(long, short = 'm')]
    level: u32,
    /// CSV file of points (default: stdin). Lines starting with `#` are skipped.
    #[arg(long)]
    #[serde(skip)]
    input: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ScrambleArgs {
    #[arg(long = "base", short = 'b')]
    base: u32,
    #[arg(long, short = 'm')]
    level: u32,
    #[arg(long, short = 's')]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    reps: u64,
    /// Scrambled digits (default: full double precision).
    #[arg(long)]
    depth: Option<u32>,
    #[command(flatten)]
    common: Common,
}

/// A Smolyak configuration `(b, s, d, L)`.
#[derive(Debug, Clone, Args, Serialize)]
struct PlanArgs {
    #[arg(long = "b", visible_alias = "base")]
    b: u32,
    #[arg(long = "s", default_value_t = 1)]
    s: usize,
    #[arg(long = "d")]
    d: usize,
    #[arg(long)]
    level: u32,
    /// Net construction for the building blocks.
    #[arg(long, default_value = "faure")]
    generator: String,
}

#[derive(Debug, Clone, Args, Serialize)]
struct NodesArgs {
    #[command(flatten)]
    plan: PlanArgs,
    /// Replication index.
    #[arg(long, default_value_t = 0)]
    rep: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct IntegrateArgs {
    /// Built-in integrand.
    #[arg(long = "f")]
    f: String,
    #[command(flatten)]
    plan: PlanArgs,
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    #[command(flatten)]
    common: Common,
}

/// A wavelet `(b, j, i, k)` with comma-separated entries.
#[derive(Debug, Clone, Args, Serialize)]
struct WaveletArgs {
    #[arg(long = "b", visible_alias = "base")]
    b: u32,
    /// Resolution, e.g. `2,0,1`.
    #[arg(long)]
    j: String,
    /// Shape (0 on inactive coordinates; default all zero).
    #[arg(long)]
    i: Option<String>,
    /// Shift (default all zero).
    #[arg(long)]
    k: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct WaveletEvalArgs {
    #[command(flatten)]
    wavelet: WaveletArgs,
    /// Evaluate `b^(-alpha |j|) Psi` instead of `Psi`.
    #[arg(long)]
    alpha: Option<f64>,
    /// CSV file of points (default: stdin).
    #[arg(long)]
    #[serde(skip)]
    input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct WaveletCoeffsArgs {
    #[arg(long = "b", visible_alias = "base")]
    b: u32,
    #[arg(long)]
    dim: usize,
    /// Grid resolution `R`: `b^R` cells per side.
    #[arg(long)]
    resolution: u32,
    /// Per-coordinate resolution cap (default: `R`, which is complete).
    #[arg(long)]
    j_max: Option<u32>,
    /// Sample a built-in integrand at cell midpoints.
    #[arg(long = "f", conflicts_with = "input")]
    f: Option<String>,
    /// Single-column CSV of cell values, row-major, last coordinate fastest.
    #[arg(long)]
    #[serde(skip)]
    input: Option<PathBuf>,
    /// Also report the `H_alpha` norm.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct MomentsArgs {
    #[command(flatten)]
    wavelet: WaveletArgs,
    /// Block dimension `s` (must equal the length of `j`).
    #[arg(long = "s")]
    s: usize,
    /// Building-block level `l`.
    #[arg(long)]
    level: u32,
    #[arg(long, default_value_t = 4096)]
    reps: u64,
    /// Skip the `|j| >= l + s - 1` precondition.
    #[arg(long)]
    unchecked: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ConvergenceArgs {
    #[arg(long = "b", visible_alias = "base")]
    b: u32,
    #[arg(long = "s", default_value_t = 1)]
    s: usize,
    #[arg(long = "d")]
    d: usize,
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    /// Level range `Lmin..Lmax` (inclusive).
    #[arg(long)]
    levels: String,
    #[arg(long, default_value_t = 4096)]
    reps: u64,
    /// Candidate resolutions reach `|j| = L + j_budget` (default `2d`).
    #[arg(long)]
    j_budget: Option<u32>,
    /// Also write `(log N, log e, compensated e)` rows to this file.
    #[arg(long)]
    #[serde(skip)]
    emit_plotdata: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
