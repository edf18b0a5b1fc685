//! `vanet-trs`: key setup, end-to-end round trips, verification,
//! benchmarks, anonymity tables and simulation sweeps.
//!
//! Data goes to stdout or files; diagnostics go to stderr. Exit code 0 on
//! success, 1 when an operation fails or an announcement is rejected, 2 for
//! bad configuration or usage.

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use vanet_trs::protocol::ProtocolError;
use vanet_trs::sim::{CryptoMode, ScenarioError};
use vanet_trs::{DecodeError, KeyError, SignError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0} exists; pass --force to overwrite")]
    Exists(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Sign(#[from] SignError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("malformed input: {0}")]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("announcement rejected: {0}")]
    Rejected(String),
    #[error("writing CSV: {0}")]
    Csv(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Scenario(_) | CliError::Key(KeyError::KeyVectorLength { .. }) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "vanet-trs", version, about = "Threshold ring signatures for vehicular announcements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the authority setup and write the public parameters and master key.
    Keygen(KeygenArgs),
    /// Request, reply, assemble and verify one announcement in-process.
    Roundtrip(RoundtripArgs),
    /// Verify an announcement packet written by `roundtrip`.
    Verify(VerifyArgs),
    /// Time request building, replying and verification over a (t, r) grid.
    Bench(BenchArgs),
    /// Run a simulation sweep from a scenario file.
    Simulate(SimulateArgs),
    /// Probability that a random guess of t members hits at least j real signers.
    Anonymity(AnonymityArgs),
}

#[derive(Args, Debug)]
pub struct KeygenArgs {
    /// Output directory for params.bin, master.bin and manifest.json.
    #[arg(long, default_value = "keys")]
    pub out: PathBuf,
    /// Length of the master key vector; must equal the identity hash width.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write only the public parameters.
    #[arg(long)]
    pub public_only: bool,
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct RoundtripArgs {
    #[arg(long, default_value = "keys/params.bin")]
    pub params: PathBuf,
    /// Master key file; defaults to master.bin next to the params file.
    #[arg(long)]
    pub master: Option<PathBuf>,
    /// Event text, carried as the road field of the event description.
    #[arg(long, default_value = "accident ahead")]
    pub msg: String,
    #[arg(long, default_value_t = 3)]
    pub t: u32,
    #[arg(long, default_value_t = 20)]
    pub r: u32,
    /// Vehicles answering the request, not counting the initiator.
    #[arg(long)]
    pub repliers: Option<u32>,
    /// Use collusion-resistant keys.
    #[arg(long)]
    pub variant: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Where to write the aggregation packet.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value = "keys/params.bin")]
    pub params: PathBuf,
    /// Aggregation packet file.
    pub input: PathBuf,
    /// Current time in seconds; enables the replay check.
    #[arg(long)]
    pub now: Option<f64>,
    #[arg(long, default_value_t = vanet_trs::protocol::DEFAULT_REPLAY_WINDOW)]
    pub window: f64,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Master key file; a fresh setup from --seed is used when absent.
    #[arg(long)]
    pub master: Option<PathBuf>,
    /// Thresholds: a value, a list `2,4,6` or a range `2..10`.
    #[arg(long, default_value = "2..10", value_parser = parse_list)]
    pub t: List,
    /// Ring sizes, same syntax as --t.
    #[arg(long, default_value = "20", value_parser = parse_list)]
    pub r: List,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also fit modeled simulator costs and write them as a `[costs]` table.
    #[arg(long)]
    pub calibrate: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TidyFormat {
    Csv,
    Jsonl,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario file (TOML); scenario keys at top level, axes under `[sweep]`.
    #[arg(env = "VANET_TRS_CONFIG")]
    pub config: PathBuf,
    #[arg(long, default_value = "sim-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_list)]
    pub t: Option<List>,
    #[arg(long, value_parser = parse_list)]
    pub r: Option<List>,
    #[arg(long)]
    pub runs: Option<u32>,
    #[arg(long, value_enum)]
    pub crypto_mode: Option<CliCryptoMode>,
    /// Format of the long-format metric table.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TidyFormat,
    #[arg(long)]
    pub force: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CliCryptoMode {
    Modeled,
    Real,
}

impl From<CliCryptoMode> for CryptoMode {
    fn from(m: CliCryptoMode) -> Self {
        match m {
            CliCryptoMode::Modeled => CryptoMode::Modeled,
            CliCryptoMode::Real => CryptoMode::Real,
        }
    }
}

#[derive(Args, Debug)]
pub struct AnonymityArgs {
    #[arg(long)]
    pub t: u32,
    #[arg(long)]
    pub r: u32,
    /// A single j; every j in 1..=t when absent.
    #[arg(long)]
    pub j: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

/// Integer list argument.
#[derive(Clone, Debug, PartialEq)]
pub struct List(pub Vec<u32>);

/// `7`, `2,4,6` or `2..10` (inclusive).
fn parse_list(s: &str) -> Result<List, String> {
    let num = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("{v:?}: {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty range {s}"));
        }
        return Ok(List((a..=b).collect()));
    }
    s.split(',').map(num).collect::<Result<_, _>>().map(List)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Keygen(a) => commands::keygen(&a),
        Command::Roundtrip(a) => commands::roundtrip(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Anonymity(a) => commands::anonymity(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
