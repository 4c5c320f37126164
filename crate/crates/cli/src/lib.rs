//! Command-line front end: argument definitions, run-config resolution and
//! the mapping from library errors to process exit codes.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod runconfig;

pub use runconfig::RunConfig;

/// Exit codes, one per error class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const DATA: i32 = 2;
    pub const NAN: i32 = 3;
    /// A verification command ran cleanly but its check did not pass.
    pub const CHECK_FAILED: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "hran", version, about = "Single-image super-resolution with residual attention feature groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Train a model on a directory of HR PNGs.
    Train(TrainArgs),
    /// Super-resolve one image with a checkpoint.
    Sr(SrArgs),
    /// PSNR/SSIM on the Y channel over a directory of HR PNGs.
    Eval(EvalArgs),
    /// Per-parameter table and total count for a configuration.
    Params(ParamsArgs),
    /// Finite-difference gradient check of every layer kind and of a small
    /// instance of the configuration.
    Gradcheck(GradcheckArgs),
    /// Channel-averaged feature maps of every residual block.
    Featmaps(FeatmapsArgs),
    /// Write degraded LR images for a directory of HR PNGs.
    Degrade(DegradeArgs),
}

/// Flags that override individual run-config keys.
#[derive(Debug, Default, Clone, Args)]
pub struct Overrides {
    /// Run config file (`key = value` lines, `#` comments).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub num_rafgs: Option<String>,
    #[arg(long)]
    pub blocks_per_rafg: Option<String>,
    #[arg(long)]
    pub channels: Option<String>,
    #[arg(long)]
    pub scale: Option<String>,
    /// none, lca, ca, eca or pa.
    #[arg(long)]
    pub attention: Option<String>,
    /// parallel or in_place.
    #[arg(long)]
    pub attention_placement: Option<String>,
    #[arg(long)]
    pub banks: Option<String>,
    #[arg(long)]
    pub upsample_channels: Option<String>,
    /// BI or BD.
    #[arg(long)]
    pub degradation: Option<String>,
    /// Any other key, as `key=value`. May be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Directory of HR training PNGs.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Directory of HR validation PNGs.
    #[arg(long, value_name = "DIR")]
    pub val: Option<PathBuf>,
    /// Output directory for checkpoints, the log and the frozen config.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Total iterations.
    #[arg(long)]
    pub iters: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<String>,
    /// LR patch side.
    #[arg(long)]
    pub patch_size: Option<String>,
    #[arg(long)]
    pub lr: Option<String>,
    #[arg(long)]
    pub halve_every: Option<String>,
    /// Continue from a checkpoint; its model configuration wins.
    #[arg(long, value_name = "PATH")]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SrArgs {
    #[arg(long, value_name = "PATH")]
    pub ckpt: PathBuf,
    #[arg(long = "in", value_name = "IMG")]
    pub input: PathBuf,
    #[arg(long, value_name = "IMG")]
    pub out: PathBuf,
    /// Process LR tiles of this side with an 8-pixel overlap. Inputs
    /// above 1280x720 are tiled at 256 by default.
    #[arg(long)]
    pub tile: Option<usize>,
    /// Expected scale; must match the checkpoint.
    #[arg(long)]
    pub scale: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    /// Bicubic upscaling of the degraded input.
    Bicubic,
    /// The HR image itself (self-comparison).
    Identity,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "PATH", required_unless_present = "baseline")]
    pub ckpt: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub hr: PathBuf,
    /// BI or BD; defaults to the checkpoint's degradation, or BI.
    #[arg(long)]
    pub deg: Option<String>,
    #[arg(long)]
    pub scale: Option<usize>,
    /// Border pixels excluded from the metrics; defaults to the scale.
    #[arg(long)]
    pub shave: Option<usize>,
    #[arg(long, value_enum, conflicts_with = "ckpt")]
    pub baseline: Option<Baseline>,
    /// Print one JSON object instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Allow BD at scales other than 3.
    #[arg(long)]
    pub bd_any_scale: bool,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Print `key = value` lines instead of the aligned table.
    #[arg(long)]
    pub kv: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct FeatmapsArgs {
    #[arg(long, value_name = "PATH")]
    pub ckpt: PathBuf,
    #[arg(long = "in", value_name = "IMG")]
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long, value_name = "DIR")]
    pub hr: PathBuf,
    #[arg(long, default_value = "BI")]
    pub deg: String,
    #[arg(long)]
    pub scale: usize,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Allow BD at scales other than 3.
    #[arg(long)]
    pub bd_any_scale: bool,
}

/// Runs a parsed command, writing its report to `out`. Returns the exit
/// code for a completed run; errors map through [`exit_code`].
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> anyhow::Result<i32> {
    match cli.command {
        Command::Train(a) => commands::train::run(&a, out),
        Command::Sr(a) => commands::sr::run(&a, out),
        Command::Eval(a) => commands::eval::run(&a, out),
        Command::Params(a) => commands::params::run(&a, out),
        Command::Gradcheck(a) => commands::gradcheck::run(&a, out),
        Command::Featmaps(a) => commands::featmaps::run(&a, out),
        Command::Degrade(a) => commands::degrade::run(&a, out),
    }
}

/// Exit code for an error, from the first library error in its chain.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use hran::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::NonFinite { .. } => exit::NAN,
                E::Io { .. } | E::Image { .. } | E::Data(_) | E::Checkpoint(_) => exit::DATA,
                E::Config(_) | E::InvalidArgument(_) | E::Shape { .. } => exit::CONFIG,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return exit::DATA;
        }
    }
    exit::CONFIG
}
