//! `imfkit` batch front-end. Exit codes: 0 success, 1 validation or domain
//! failure, 2 usage error, 3 I/O error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "imfkit", version, about = "Impact mitigation factor and locomotion reward toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a robot model file.
    ModelValidate { model: PathBuf },
    /// Evaluate the impact mitigation factor for one state or a sweep of states.
    Imf(ImfArgs),
    /// Cross-check the closed-form impulses against the constrained impact solve.
    OracleCheck {
        model: PathBuf,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Per-step rewards over a trajectory log.
    Rewards(RewardsArgs),
    /// Energy and tracking metrics of a trajectory log.
    Metrics {
        trajectory: PathBuf,
        /// Robot mass in kg.
        #[arg(long)]
        mass: f64,
        #[arg(long, default_value_t = 9.81)]
        g: f64,
        /// Model file; defaults to the path in the log header, relative to the log.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train a least-squares discriminator on transition datasets.
    DiscTrain(DiscTrainArgs),
    /// Finite-difference check of the discriminator loss gradient.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        nets: u64,
        #[arg(long, value_enum, default_value_t = Penalty::Input)]
        penalty: Penalty,
    },
}

#[derive(Debug, Args)]
#[group(id = "frames", required = true, multiple = false)]
struct FrameSelection {
    /// Contact frame to evaluate.
    #[arg(long)]
    frame: Option<String>,
    /// Evaluate every contact frame.
    #[arg(long)]
    all_frames: bool,
}

#[derive(Debug, Args)]
struct ImfArgs {
    model: PathBuf,
    /// A JSON state, or with `--sweep` one JSON state per line.
    states: PathBuf,
    #[command(flatten)]
    frames: FrameSelection,
    /// Emit CSV with one row per state and frame.
    #[arg(long)]
    sweep: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Amp,
    Handcrafted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Penalty {
    Input,
    Parameter,
}

#[derive(Debug, Args)]
struct RewardsArgs {
    model: PathBuf,
    trajectory: PathBuf,
    /// TOML reward weights.
    weights: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Add the per-sample impact mitigation reward.
    #[arg(long)]
    imf: bool,
    /// Discriminator checkpoint for the style reward (amp mode).
    #[arg(long)]
    disc: Option<PathBuf>,
    /// Reconstruct missing joint accelerations by central differences.
    #[arg(long)]
    accel_fallback: bool,
    /// Per-step CSV destination; standard output when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Summary JSON destination; standard error when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiscTrainArgs {
    /// Reference transitions, one `{"s": [...], "s_next": [...]}` per line.
    reference: PathBuf,
    /// Policy transitions in the same format.
    policy: PathBuf,
    /// TOML training configuration.
    config: PathBuf,
    /// Checkpoint destination.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured epoch count.
    #[arg(long)]
    epochs: Option<usize>,
    /// Loss-history CSV destination; defaults to the checkpoint path with `.loss.csv`.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
