//! The `lrm` command line: data generation, training, fitting, phase
//! analysis, latent walks, evaluation and rank sweeps.
//!
//! Exit codes: 0 on success, 1 when the work itself fails, 2 for usage
//! errors (bad flags, missing inputs). `LRM_THREADS` caps the worker pool.

mod commands;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::trajectory::Orientation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

pub(crate) type CliResult<T = ()> = std::result::Result<T, CliError>;

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug)]
#[command(name = "lrm", version, about = "Low-rank modulated video functa on synthetic cardiac phantoms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a train / held-out phantom suite with a manifest.
    Gen(GenArgs),
    /// Meta-train a shared backbone and subspace.
    Train(TrainArgs),
    /// Encode videos with a frozen checkpoint.
    Fit(FitArgs),
    /// Unsupervised end-diastole / end-systole detection for one video.
    Analyze(AnalyzeArgs),
    /// Render frames along the leading principal axis of the temporal codes.
    Walk(WalkArgs),
    /// PSNR and SSIM3D of reconstructions against references.
    Eval(EvalArgs),
    /// Train, fit and evaluate once per latent rank.
    Ranksweep(RanksweepArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub train: usize,
    #[arg(long, default_value_t = 8)]
    pub held_out: usize,
    #[arg(long, default_value_t = 32)]
    pub frames: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 10.0)]
    pub period_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub period_max: f64,
}

/// Training configuration sources, applied in order: defaults, `--config`,
/// each `--set`, then `--seed`.
#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set rank=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// A `.lrmv` file or a directory of them.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Outer iterations (overrides the configuration).
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args, Debug, Clone, Copy, Default)]
pub struct FitFlags {
    #[arg(long)]
    pub fit_steps: Option<usize>,
    #[arg(long)]
    pub fit_lr: Option<f64>,
    /// Pixels per frame per step (0 = full grid).
    #[arg(long)]
    pub fit_subsample: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// A `.lrmv` file or a directory of them.
    #[arg(long)]
    pub video: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fit: FitFlags,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Previously fitted codes; otherwise `--video` is fitted first.
    #[arg(long)]
    pub latents: Option<PathBuf>,
    #[arg(long)]
    pub video: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "pca-sign", value_parser = parse_orientation)]
    pub orient: Orientation,
    /// Minimum prominence as a multiple of the filtered signal's std.
    #[arg(long, default_value_t = crate::trajectory::DEFAULT_PROMINENCE_FRAC)]
    pub prominence: f64,
    #[arg(long)]
    pub detrend_window: Option<usize>,
    /// Expected cycle length in frames, used for the default detrend window.
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long, default_value_t = 7)]
    pub savgol_window: usize,
    #[arg(long, default_value_t = 2)]
    pub savgol_order: usize,
    /// Labelled end-diastole frames, e.g. `--ed 4,20`.
    #[arg(long, value_delimiter = ',')]
    pub ed: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub es: Vec<usize>,
    /// Omit the timestamp comment from SVG output.
    #[arg(long)]
    pub deterministic: bool,
    #[command(flatten)]
    pub fit: FitFlags,
}

#[derive(Args, Debug)]
pub struct WalkArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub latents: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 9)]
    pub samples: usize,
    #[arg(long, default_value_t = 1.0)]
    pub overshoot: f64,
    #[arg(long, requires = "alpha_max", allow_hyphen_values = true)]
    pub alpha_min: Option<f64>,
    #[arg(long, requires = "alpha_min", allow_hyphen_values = true)]
    pub alpha_max: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// A `.lrmv` file or a directory of them.
    #[arg(long)]
    pub reference: PathBuf,
    /// Matching reconstructions (same file names when directories).
    #[arg(long)]
    pub reconstruction: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RanksweepArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Held-out videos to fit and score.
    #[arg(long)]
    pub eval: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ranks: Vec<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub deterministic: bool,
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn configure_threads() -> CliResult {
    let Ok(value) = std::env::var("LRM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("LRM_THREADS must be a positive integer, got {value:?}")))?;
    // A pool may already exist when embedded in tests; keep it then.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code. Messages go to stdout / stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match configure_threads().and_then(|_| commands::dispatch(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    run(std::env::args_os())
}

pub use commands::{train_fit_eval, RankScore};
