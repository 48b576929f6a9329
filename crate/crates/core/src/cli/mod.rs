//! The `reasonseg` command line.
//!
//! Exit codes: 0 success, 1 run failure, 2 usage or configuration error.

mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::backends::BackendError;
use crate::cot::ParseError;
use crate::eval::EvalError;
use crate::io::IoError;
use crate::model::ModelError;
use crate::pipeline::{OnlineError, RunError};
use crate::sampling::GridError;

pub use commands::execute;
pub use config::{CliConfig, ConfigError, MockConfig, OnlineConfig, Overrides};

#[derive(Debug, Parser)]
#[command(name = "reasonseg", version, about = "Reasoning video segmentation with pluggable model agents")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Log filter, e.g. `info` or `reasonseg=debug`. Logs are JSON lines on stderr.
    #[arg(long, global = true, value_name = "FILTER")]
    pub log_level: Option<String>,
    /// Chat-completions URL for the keyframe selector.
    #[arg(long, global = true, value_name = "URL")]
    pub selector_endpoint: Option<String>,
    #[arg(long, global = true, value_name = "NAME")]
    pub selector_model: Option<String>,
    /// Sampling seed forwarded to the selector endpoint.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Base URL of the segmentation/propagation server.
    #[arg(long, global = true, value_name = "URL")]
    pub model_server: Option<String>,
    /// Upper bound on instances processed in parallel.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Use the mock agents of this fixture scenario instead of remote services.
    #[arg(long, global = true, value_name = "SCENARIO")]
    pub mock: Option<String>,
    /// Mock fixture file (defaults to the built-in one).
    #[arg(long, global = true, value_name = "FILE")]
    pub mock_fixture: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment every object matching a query across a clip.
    Run(RunArgs),
    /// Track the query's target over a frame stream, judging keyframes periodically.
    RunOnline(OnlineArgs),
    /// Score predicted masks against annotations (J, F, J&F).
    Eval(EvalArgs),
    /// Parse a selector transcript and print the result as JSON.
    Parse(ParseArgs),
    /// Write the candidate grid a clip would be shown as.
    SampleGrid(GridArgs),
    /// Run a fixture scenario end to end with mock agents.
    MockDemo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Directory of frame images, ordered by file name.
    #[arg(long, value_name = "DIR")]
    pub frames: PathBuf,
    #[arg(long)]
    pub query: String,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Stride target for candidate keyframes.
    #[arg(long)]
    pub candidates: Option<usize>,
    /// Longest allowed grid side in pixels.
    #[arg(long, value_name = "PIXELS")]
    pub side_cap: Option<u32>,
    /// Keep overlapping instance masks as propagated.
    #[arg(long)]
    pub keep_overlaps: bool,
}

#[derive(Debug, Args)]
pub struct OnlineArgs {
    /// Directory of frames, consumed in file-name order.
    #[arg(long, value_name = "DIR", required_unless_present = "stdin_frames", conflicts_with = "stdin_frames")]
    pub frames: Option<PathBuf>,
    /// Read frame paths from stdin, one per line.
    #[arg(long)]
    pub stdin_frames: bool,
    #[arg(long)]
    pub query: String,
    /// Judge every `xi` frames.
    #[arg(long)]
    pub xi: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted masks: one folder per sequence (or a single folder of PNGs).
    #[arg(long, value_name = "DIR")]
    pub pred: PathBuf,
    /// Annotations: one folder per sequence (or a single folder of PNGs).
    #[arg(long, value_name = "DIR", required_unless_present = "manifest")]
    pub gt: Option<PathBuf>,
    /// JSONL jobs; predictions are read from `PRED/<job id>/`.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Object label to score in multi-object annotations (default: any non-zero).
    #[arg(long)]
    pub object_id: Option<u8>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write a J&F/J/F table.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Transcript file (`-` for stdin).
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Number of candidates the transcript chose from.
    #[arg(long, required_unless_present = "online")]
    pub t_prime: Option<usize>,
    /// Parse a Yes/No frame judgment instead of an output list.
    #[arg(long)]
    pub online: bool,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, value_name = "DIR")]
    pub frames: PathBuf,
    /// Output PNG.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long, value_name = "PIXELS")]
    pub side_cap: Option<u32>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub fixture: Option<PathBuf>,
    /// Run the streaming tracker instead of the whole-clip pipeline.
    #[arg(long)]
    pub online: bool,
    #[arg(long)]
    pub xi: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Online(#[from] OnlineError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Backend(BackendError::Usage(_)) => 2,
            _ => 1,
        }
    }
}

/// Parses `args`, runs the command with the process environment, and maps the
/// outcome to an exit code.
pub fn main_from_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match execute(cli, &|k| std::env::var(k).ok()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
