//! `gliograde` — tumor-grade classification pipeline driver.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O, degenerate data,
//! per-patient extraction failures), 2 configuration or usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gliograde::error::Error;
use gliograde::features::FeatureMode;
use gliograde::harness::{
    self, cmd_evaluate, cmd_param_count, cmd_train, synthesize_corpus, ExtractOptions, TimingMode,
    DEFAULT_RESOLUTION,
};

#[derive(Parser)]
#[command(
    name = "gliograde",
    about = "Brain-tumor grade classification: K-means ROI segmentation, mixed DWT/DCT features, LSTM/MLP sequence classifiers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract per-slice features from a dataset manifest.
    Extract(ExtractArgs),
    /// Train a classifier on an extracted feature file.
    Train(TrainArgs),
    /// Evaluate a saved model on a feature file.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic labeled corpus.
    Synth(SynthArgs),
    /// Print the parameter count of an architecture.
    ParamCount(ParamCountArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Dataset manifest CSV (patient_id,grade,slice_dir).
    #[arg(long)]
    manifest: PathBuf,
    /// Number of dominant DCT coefficients.
    #[arg(long, default_value_t = 100)]
    p: usize,
    /// Number of DWT coefficients (perfect square).
    #[arg(long, default_value_t = 64)]
    q: usize,
    /// Slices per patient sequence.
    #[arg(long, default_value_t = 30)]
    slices: usize,
    /// Global extraction seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output feature file.
    #[arg(long)]
    out: PathBuf,
    /// Feature construction: mixed, dwt, or raw.
    #[arg(long, default_value = "mixed")]
    mode: String,
    /// Working resolution (slices are resized to resolution x resolution).
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
}

#[derive(Args)]
struct TrainArgs {
    /// Feature file from `extract`.
    #[arg(long)]
    features: PathBuf,
    /// Architecture: lstm21, lstm32, or baseline.
    #[arg(long)]
    arch: String,
    /// Training config (key=value lines); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the trained model container.
    #[arg(long)]
    model_out: PathBuf,
    /// Where to write the metrics JSON.
    #[arg(long)]
    metrics_out: PathBuf,
    /// Timing in metrics: wall (measured) or zero (byte-reproducible).
    #[arg(long, default_value = "wall")]
    timing: String,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Model container written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Feature file to score.
    #[arg(long)]
    features: PathBuf,
    /// Where to write the metrics JSON.
    #[arg(long)]
    metrics_out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for slices and the manifest.
    #[arg(long)]
    out: PathBuf,
    /// Patients per grade.
    #[arg(long, default_value_t = 10)]
    per_grade: usize,
    /// Slices per patient.
    #[arg(long, default_value_t = 30)]
    slices: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ParamCountArgs {
    /// Architecture: lstm21, lstm32, or baseline.
    #[arg(long)]
    arch: String,
    /// Per-slice feature dimension.
    #[arg(long)]
    input_dim: usize,
    /// Slices per sequence.
    #[arg(long, default_value_t = 30)]
    slices: usize,
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Config(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Extract(args) => {
            let mode: FeatureMode = args.mode.parse()?;
            let opts = ExtractOptions {
                manifest: args.manifest,
                mode,
                p: args.p,
                q: args.q,
                seq_len: args.slices,
                seed: args.seed,
                resolution: args.resolution,
                out: args.out.clone(),
            };
            let failures = harness::cmd_extract(&opts)?;
            for f in &failures {
                eprintln!("patient {}: {}", f.patient_id, f.error);
            }
            if failures.is_empty() {
                eprintln!("features written to {}", args.out.display());
                Ok(0)
            } else {
                eprintln!(
                    "features written to {} ({} patient(s) failed)",
                    args.out.display(),
                    failures.len()
                );
                Ok(1)
            }
        }
        Command::Train(args) => {
            let timing = match args.timing.as_str() {
                "wall" => TimingMode::Wall,
                "zero" => TimingMode::Zero,
                other => {
                    return Err(Error::Config(format!(
                        "unknown timing mode {other:?} (expected wall or zero)"
                    )))
                }
            };
            let metrics = cmd_train(
                &args.features,
                &args.arch,
                args.config.as_deref(),
                &args.model_out,
                &args.metrics_out,
                timing,
            )?;
            eprintln!(
                "{}: average accuracy {:.4}, best {:.4} over {} run(s); model -> {}, metrics -> {}",
                args.arch,
                metrics.average_accuracy,
                metrics.best_accuracy,
                metrics.per_run_accuracy.len(),
                args.model_out.display(),
                args.metrics_out.display()
            );
            Ok(0)
        }
        Command::Evaluate(args) => {
            let metrics = cmd_evaluate(&args.model, &args.features, &args.metrics_out)?;
            eprintln!(
                "accuracy {:.4} over {} patient(s); metrics -> {}",
                metrics.average_accuracy,
                metrics.confusion.iter().flatten().sum::<u64>(),
                args.metrics_out.display()
            );
            Ok(0)
        }
        Command::Synth(args) => {
            let summary = synthesize_corpus(&args.out, args.per_grade, args.slices, args.seed)?;
            eprintln!(
                "{} patients x {} slices -> {}",
                summary.patients.len(),
                args.slices,
                summary.manifest_path.display()
            );
            Ok(0)
        }
        Command::ParamCount(args) => {
            let count = cmd_param_count(&args.arch, args.input_dim, args.slices)?;
            println!("{count}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
