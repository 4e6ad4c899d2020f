//! `madlab`: generate data, train, evaluate and compare runs.
//!
//! Exit codes: 0 success, 1 config/IO/other error, 2 data schema violation,
//! 3 numeric abort, 4 checkpoint missing or config hash mismatch,
//! 5 fewer than two replicates to compare.

mod commands;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use madlab::trainer::EmbeddingSpace;

#[derive(Parser)]
#[command(name = "madlab", version, about = "Semi-supervised multi-mode anomaly detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command that builds a configuration.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// Flat `key=value` config file; unset keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed (replicate r uses seed + r).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override one config key, e.g. `--set finetune.n_s=1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write train.csv, val.csv and test.csv for the synthetic benchmark.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run all replicates and write checkpoints, metrics and the center trajectory.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        replicates: Option<usize>,
        /// Directory with train.csv, val.csv and test.csv. Without it every
        /// replicate generates its own data from its seed.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated labeled ratios; each gets its own subdirectory.
        #[arg(long, value_delimiter = ',')]
        labeled_ratio: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a split with a trained checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Data directory; defaults to regenerating the replicate's data.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Config the checkpoint must have been trained with.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "test", value_parser = ["val", "test"])]
        split: String,
        /// Embedding space for the kNN score.
        #[arg(long, default_value_t = EmbeddingSpace::Mad)]
        embedding: EmbeddingSpace,
        #[arg(long)]
        out: PathBuf,
    },
    /// Welch t-test between two metrics files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "test", value_parser = ["val", "test"])]
        split: String,
        /// Which AUC to compare.
        #[arg(long, default_value = "auc", value_parser = ["auc", "auc_knn", "auc_knn_pretext", "auc_untrained"])]
        field: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MADLAB_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { config, out } => commands::generate(&config, &out),
        Command::Train {
            config,
            replicates,
            data,
            labeled_ratio,
            out,
        } => commands::train(&config, replicates, data.as_deref(), &labeled_ratio, &out),
        Command::Eval {
            checkpoint,
            data,
            config,
            split,
            embedding,
            out,
        } => commands::eval(&checkpoint, data.as_deref(), config.as_deref(), &split, embedding, &out),
        Command::Compare { a, b, split, field } => commands::compare(&a, &b, &split, &field),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
