//! Semi-supervised anomaly detection for data whose normal class has
//! several modes.
//!
//! An encoder is first pretrained with a contrastive instance-discrimination
//! loss on all training samples. Its body is then copied into a detection
//! encoder that is fine-tuned so presumed-normal samples sit close to one of
//! several hypersphere centers while a few labeled anomalies are pushed
//! away. Centers that attract too few normal samples are pruned after each
//! epoch. A sample's anomaly score is its distance to the nearest live
//! center.
//!
//! ```
//! use madlab::trainer::{run_replicate, ExperimentConfig};
//!
//! let mut cfg = ExperimentConfig::default();
//! for kv in ["data.n_train=200", "data.n_val=100", "data.n_test=100",
//!            "pretrain.epochs=2", "finetune.epochs=2", "finetune.n_s=8"] {
//!     cfg.apply_override(kv)?;
//! }
//! let out = run_replicate(&cfg, 0, None)?;
//! let test = out.record("test").unwrap();
//! assert!((0.0..=1.0).contains(&test.auc));
//! # Ok::<(), madlab::Error>(())
//! ```
//!
//! The modules follow the pipeline: [`numcore`] holds the small dense
//! network and optimizers, [`data`] the synthetic benchmark, [`losses`] the
//! two objectives, [`spheres`] the centers, [`trainer`] the training loops
//! and [`eval`] the metrics.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
mod error;
pub mod eval;
pub mod losses;
pub mod numcore;
pub mod rng;
pub mod spheres;
pub mod trainer;

pub use error::{Error, Result};

// The guide in book/ is compiled into doc-tests so its snippets cannot rot.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/pretraining.md")]
    mod pretraining {}
    #[doc = include_str!("../../../book/src/hyperspheres.md")]
    mod hyperspheres {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/command_line.md")]
    mod command_line {}
}
