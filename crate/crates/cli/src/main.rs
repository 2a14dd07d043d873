use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

mod commands;

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "lnn412",
    version,
    about = "Threshold simulator for the concatenated [[4,1,2]] code on a linear array"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Build a gadget at some level and print its location counts.
    Build(BuildArgs),
    /// Estimate the failure rate given exactly `errors` faults.
    Rsubset(RsubsetArgs),
    /// Monte Carlo with independent faults at rate `p`.
    Mc(McArgs),
    /// Expand r_i tables into failure-rate curves.
    Expand(ExpandArgs),
    /// Report crossings between curves of consecutive levels.
    Scan(ScanArgs),
}

#[derive(Args, Debug, Serialize)]
struct BuildArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..))]
    level: u8,
    /// `exrec-cnot` or a rectangle name (ec, cnot, swap, h, prep-z, meas-x, ...).
    #[arg(long, default_value = "exrec-cnot")]
    gadget: String,
    /// Also report the non-local reference EC.
    #[arg(long)]
    compare_nonlocal: bool,
    /// Write the circuit text here (levels 1 to 3 only).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    manifest: ManifestArgs,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Decoder {
    #[default]
    Literal,
    Extended,
}

#[derive(Args, Debug, Serialize)]
struct SimArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..))]
    level: u8,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, env = "LNN412_WORKERS")]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Decoder::Literal)]
    decoder: Decoder,
    /// Re-run this trial alone and write its decoding decisions as JSON.
    #[arg(long, requires = "dump")]
    dump_trial: Option<u64>,
    #[arg(long, requires = "dump_trial")]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ManifestArgs {
    /// Where to write the run manifest; defaults to `<out>.manifest.json`,
    /// or stderr when there is no output file.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct RsubsetArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    errors: u64,
    #[arg(long)]
    trials: u64,
    /// CSV file to append the row to.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    manifest: ManifestArgs,
}

#[derive(Args, Debug, Serialize)]
struct McArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    trials: u64,
    /// Trials between checkpoints.
    #[arg(long, default_value_t = 10_000)]
    chunk: u64,
    /// Progress file; an existing one with the same settings is resumed.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// CSV file to append the summary row to.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    manifest: ManifestArgs,
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    #[arg(long, default_value_t = 1e-7)]
    p_min: f64,
    #[arg(long, default_value_t = 1e-4)]
    p_max: f64,
    #[arg(long, default_value_t = 61)]
    points: usize,
    /// Warn where the neglected tail exceeds this fraction of P_fail.
    #[arg(long, default_value_t = 0.01)]
    tail_fraction: f64,
}

#[derive(Args, Debug, Serialize)]
struct ExpandArgs {
    /// r_i CSV files (`level,i,trials,failures`).
    #[arg(long, required = true, num_args = 1..)]
    ri: Vec<PathBuf>,
    /// Only these levels; default is every level present.
    #[arg(long, num_args = 1..)]
    levels: Vec<usize>,
    #[command(flatten)]
    grid: GridArgs,
    /// Directory for `curve_n<level>.csv` files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    manifest: ManifestArgs,
}

#[derive(Args, Debug, Serialize)]
struct ScanArgs {
    #[arg(long, num_args = 1..)]
    ri: Vec<PathBuf>,
    /// Curve CSVs (`level,p,pfail,plo,phi`), including `mc` output.
    #[arg(long, num_args = 1..)]
    curves: Vec<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    /// JSON crossing report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    manifest: ManifestArgs,
}

pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let result = match &cli.command {
        Command::Build(a) => commands::build(a, &argv),
        Command::Rsubset(a) => commands::rsubset(a, &argv),
        Command::Mc(a) => commands::mc(a, &argv),
        Command::Expand(a) => commands::expand(a, &argv),
        Command::Scan(a) => commands::scan(a, &argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
