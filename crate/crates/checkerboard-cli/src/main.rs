//! Command-line front end. Everything is computed in memory first and written
//! in one shot at the end, so a failing run never leaves partial output.
//! Exit codes: 0 ok, 1 a cross-check flagged a discrepancy, 2 bad usage or
//! config, 3 internal/runtime failure.

mod commands;
mod config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, Format, Profile};
use table::Metadata;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Flagged(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Flagged(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Flagged(m) | CliError::Internal(m) => m,
        }
    }
}

/// Empty-interval probabilities and correlations of coalescing lattice
/// boundaries, each computable by several independent routes that are checked
/// against one another.
#[derive(Parser)]
#[command(name = "checkerboard", version, max_term_width = 100)]
struct Cli {
    /// JSON config file; explicit flags override its fields
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed for sampling commands
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Worker threads for Monte Carlo; falls back to the CHECKERBOARD_THREADS
    /// environment variable, then to all cores
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the result table here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Table format (csv is the canonical, byte-reproducible one)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probability that the given intervals hold no boundary at diagonal T
    EmptyInterval(EmptyIntervalArgs),
    /// Boundary correlation at the given sites on diagonal T
    Correlate(CorrelateArgs),
    /// Crossing probabilities A over a separation-by-horizon grid
    KernelTable(KernelTableArgs),
    /// Cross-route consistency suite; exits 1 if any check flags
    Verify(VerifyArgs),
    /// Dump forward boundary trajectories for seeded streams
    Simulate(SimulateArgs),
}

#[derive(Args)]
pub struct EmptyIntervalArgs {
    /// Constant West weight, e.g. 1/2 or 0.4
    #[arg(long)]
    p: Option<String>,
    /// Shifted-quadrant weight u/(u+v), as the two shifts U,V
    #[arg(long, conflicts_with = "p", value_name = "U,V")]
    polya: Option<String>,
    /// Observation diagonal T
    #[arg(long, value_name = "T")]
    horizon: Option<i64>,
    /// Interval with endpoints a+1/2 and b+1/2 (covers sites a+1..=b);
    /// repeat for several intervals
    #[arg(long = "interval", value_name = "A:B", allow_hyphen_values = true)]
    intervals: Vec<String>,
    /// Also run the exact enumeration and lineage-DP oracles
    #[arg(long)]
    exact: bool,
    /// Also run a Monte Carlo estimate (needs --samples and --seed)
    #[arg(long)]
    mc: bool,
}

#[derive(Args)]
pub struct CorrelateArgs {
    /// Constant West weight, e.g. 1/2 or 0.4
    #[arg(long)]
    p: Option<String>,
    /// Shifted-quadrant weight u/(u+v), as the two shifts U,V
    #[arg(long, conflicts_with = "p", value_name = "U,V")]
    polya: Option<String>,
    /// Observation diagonal T
    #[arg(long, value_name = "T")]
    horizon: Option<i64>,
    /// Sites to correlate: "0,1,4" or "0..3"
    #[arg(long, allow_hyphen_values = true)]
    sites: Option<String>,
    /// Also run a Monte Carlo estimate (needs --samples and --seed)
    #[arg(long)]
    mc: bool,
}

#[derive(Args)]
pub struct KernelTableArgs {
    /// biased, asymmetric, poisson, bidirectional, or scaling-limit
    #[arg(long)]
    kind: Option<String>,
    /// Step weight for the discrete kinds, e.g. 1/2 or 0.5
    #[arg(long)]
    p: Option<String>,
    /// Total jump rate (poisson kind)
    #[arg(long)]
    rate: Option<f64>,
    /// Upward jump rate (bidirectional kind)
    #[arg(long = "rate-up")]
    rate_up: Option<f64>,
    /// Downward jump rate (bidirectional kind)
    #[arg(long = "rate-down")]
    rate_down: Option<f64>,
    /// Time for the continuum kinds; a comma list makes a time grid
    #[arg(long)]
    time: Option<f64>,
    /// Time grid for continuum kinds, e.g. "0.5,1,2"
    #[arg(long)]
    times: Option<String>,
    /// Horizon grid for discrete kinds: "1..8", "3", or "1,2,4"
    #[arg(long = "T", value_name = "RANGE")]
    horizons: Option<String>,
    /// Site-separation grid: "2..8", "3", or "1,2,4"
    #[arg(long = "delta", value_name = "RANGE")]
    separations: Option<String>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// quick stays under a minute; full runs the deep sweeps too
    #[arg(long, value_enum)]
    profile: Option<Profile>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Constant West weight, e.g. 1/2 or 0.4
    #[arg(long)]
    p: Option<String>,
    /// Shifted-quadrant weight u/(u+v), as the two shifts U,V
    #[arg(long, conflicts_with = "p", value_name = "U,V")]
    polya: Option<String>,
    /// How many diagonals to evolve
    #[arg(long, value_name = "T")]
    horizon: Option<i64>,
    /// Initially occupied boundary sites, e.g. "0..6"
    #[arg(long, value_name = "LO..HI", allow_hyphen_values = true)]
    window: Option<String>,
    /// Number of independent trajectories
    #[arg(long)]
    streams: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let file = match &cli.config {
        Some(path) => config::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        std::env::set_var("CHECKERBOARD_THREADS", n.to_string());
    }
    let seed = cli.seed.or(file.seed);
    let samples = cli.samples.or(file.samples);
    let format = cli.format.or(file.format).unwrap_or(Format::Csv);
    let output = cli.output.clone().or_else(|| file.output.clone());

    let (label, result) = match &cli.command {
        Command::EmptyInterval(args) => (
            "empty-interval",
            commands::empty_interval(args, &file, seed, samples)?,
        ),
        Command::Correlate(args) => (
            "correlate",
            commands::correlate(args, &file, seed, samples)?,
        ),
        Command::KernelTable(args) => ("kernel-table", commands::kernel_table(args, &file)?),
        Command::Verify(args) => ("verify", commands::verify(args, &file, seed, samples)?),
        Command::Simulate(args) => ("simulate", commands::simulate(args, &file, seed)?),
    };

    let body = match format {
        Format::Csv => result.table.to_csv(),
        Format::Json => result.table.to_json(&Metadata {
            version: env!("CARGO_PKG_VERSION"),
            command: label.to_string(),
            seed,
            samples,
            wall_ms: started.elapsed().as_millis(),
        }),
    };
    match &output {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))?,
        None => print!("{body}"),
    }
    match result.flag {
        Some(message) => Err(CliError::Flagged(message)),
        None => Ok(()),
    }
}
