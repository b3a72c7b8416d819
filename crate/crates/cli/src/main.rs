//! `sevq`: train, apply and compare structural-entropy residual quantizers on
//! feature matrices.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sevq_core::quantizer::{DEFAULT_ANCHORS_PER_CLUSTER, DEFAULT_MAX_NODES, DEFAULT_STAGES};

#[derive(Parser, Debug)]
#[command(
    name = "sevq",
    version,
    about = "Structural-entropy vector quantization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a codec and write the model plus a training report.
    Train(TrainArgs),
    /// Quantize features into a token matrix.
    Encode(EncodeArgs),
    /// Reconstruct features from tokens.
    Decode(DecodeArgs),
    /// Train the codec and a k-means baseline, then compare them on a held-out split.
    Compare(CompareArgs),
}

/// Training parameters shared by `train` and `compare`.
#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainOpts {
    /// Cosine similarity threshold for graph edges.
    #[arg(long, default_value_t = sevq_core::graph::DEFAULT_TAU)]
    pub tau: f64,
    /// Clusters per group in hierarchical minimization.
    #[arg(long, default_value_t = sevq_core::codebook::DEFAULT_SUBSET_SIZE)]
    pub subset_n: usize,
    /// Number of residual stages.
    #[arg(long, default_value_t = DEFAULT_STAGES)]
    pub stages: usize,
    /// Anchors kept per cluster for out-of-sample assignment.
    #[arg(long, default_value_t = DEFAULT_ANCHORS_PER_CLUSTER)]
    pub anchors_per_cluster: usize,
    /// Training rows beyond this many are subsampled.
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    pub max_nodes: usize,
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Push codewords apart after extraction.
    #[arg(long)]
    pub disentangle: bool,
    /// Gradient steps when disentangling.
    #[arg(long, default_value_t = 100)]
    pub disentangle_steps: usize,
}

/// Output options shared by every command.
#[derive(Args, Debug, Clone, Serialize)]
pub struct OutputOpts {
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Emit the per-stage table as CSV instead of the JSON report.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainArgs {
    #[arg(long, default_value = "features.csv")]
    pub features: PathBuf,
    #[arg(long, default_value = "model.json")]
    pub model: PathBuf,
    #[command(flatten)]
    pub train: TrainOpts,
    /// Write each stage's edge list and partition next to the model.
    #[arg(long)]
    pub dump_graph: bool,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EncodeArgs {
    #[arg(long, default_value = "features.csv")]
    pub features: PathBuf,
    #[arg(long, default_value = "model.json")]
    pub model: PathBuf,
    /// Token output; `.json` for JSON, anything else for CSV.
    #[arg(long, default_value = "tokens.csv")]
    pub tokens: PathBuf,
    /// Compare the four-term closed form with the exact join change.
    #[arg(long)]
    pub diagnostic_eq4: bool,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DecodeArgs {
    #[arg(long, default_value = "model.json")]
    pub model: PathBuf,
    #[arg(long, default_value = "tokens.csv")]
    pub tokens: PathBuf,
    /// Reconstruction output; `.f32` for raw floats, anything else for CSV.
    #[arg(long, default_value = "reconstruction.csv")]
    pub output_features: PathBuf,
    /// Original features; adds a distortion block to the report.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CompareArgs {
    #[arg(long, default_value = "features.csv")]
    pub features: PathBuf,
    #[command(flatten)]
    pub train: TrainOpts,
    /// Compare the four-term closed form with the exact join change.
    #[arg(long)]
    pub diagnostic_eq4: bool,
    #[command(flatten)]
    pub output: OutputOpts,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let failure = report::Failure::usage(e.to_string());
            failure.emit();
            return failure.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Train(a) => commands::train(a),
        Command::Encode(a) => commands::encode(a),
        Command::Decode(a) => commands::decode(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            failure.emit();
            failure.exit_code()
        }
    }
}
