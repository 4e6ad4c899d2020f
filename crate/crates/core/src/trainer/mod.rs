//! Two-phase training: contrastive pretraining of the body, weight
//! transfer, then multi-hypersphere fine-tuning with center pruning.

mod config;
mod encoder;
mod experiment;
mod loops;
mod run;

pub use config::{ExperimentConfig, FinetuneConfig, ModelConfig, PretrainConfig};
pub use encoder::{body_specs, transfer_weights, Encoder, EncoderGrads, EncoderTape};
pub use experiment::{
    evaluate_split, replicate_seed, run_experiment, run_replicate, untrained_auc, Aggregate, EmbeddingSpace,
    ExperimentResult, Metrics, MetricsRecord, ReplicateFailure, ReplicateOutcome, SplitEvaluation,
};
pub use loops::{pretrain_epoch, Detector};
pub use run::{Checkpoint, History, Monitor, RunState, Stage, Trainer, CHECKPOINT_FORMAT};
