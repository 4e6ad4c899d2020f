//! Replicated experiments: generate, train, score, aggregate.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::encoder::Encoder;
use super::loops::Detector;
use super::run::{Monitor, RunState, Trainer};
use crate::data::{generate_synthetic, Dataset, Splits, TrainingView};
use crate::error::{Error, Result};
use crate::eval::{auc, knn_score, replicate_ci, ReplicateStats, ScoredSet};

/// Embedding space used for the kNN baseline score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbeddingSpace {
    /// Output of the fine-tuned detection encoder.
    #[default]
    Mad,
    /// Body output of the pretrained encoder, before any fine-tuning.
    Pretext,
}

impl FromStr for EmbeddingSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mad" => Ok(Self::Mad),
            "pretext" => Ok(Self::Pretext),
            other => Err(Error::Config(format!("unknown embedding `{other}`, expected mad or pretext"))),
        }
    }
}

impl fmt::Display for EmbeddingSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mad => "mad",
            Self::Pretext => "pretext",
        })
    }
}

/// Per-sample scores of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEvaluation {
    /// Distance to the nearest live center.
    pub scores: Vec<f64>,
    /// Mean distance to the k nearest presumed-normal training samples.
    pub knn_scores: Vec<f64>,
    pub abnormal: Vec<bool>,
    pub auc: f64,
    pub auc_knn: f64,
}

fn detector(state: &RunState) -> Result<&Detector> {
    state
        .detector
        .as_ref()
        .ok_or_else(|| Error::State("the run has not reached fine-tuning yet".into()))
}

fn auc_of(scores: &[f64], abnormal: &[bool]) -> Result<f64> {
    auc(ScoredSet {
        scores,
        positive: abnormal,
    })
}

/// Scores `data` with a trained run. Ground truth is read here, for the AUC only.
pub fn evaluate_split(
    state: &RunState,
    cfg: &ExperimentConfig,
    train: &TrainingView,
    data: &Dataset,
    space: EmbeddingSpace,
) -> Result<SplitEvaluation> {
    let det = detector(state)?;
    let x = data.features();
    let normal = train.features.select_rows(&train.presumed_normal_indices());
    let embed = |m: &_| match space {
        EmbeddingSpace::Mad => det.encoder.embed(m),
        EmbeddingSpace::Pretext => state.pretext.embed_body(m),
    };
    let scores = det.scores(&x)?;
    let knn_scores = knn_score(&embed(&x)?, &embed(&normal)?, cfg.knn_k)?;
    let abnormal = data.abnormal_mask();
    Ok(SplitEvaluation {
        auc: auc_of(&scores, &abnormal)?,
        auc_knn: auc_of(&knn_scores, &abnormal)?,
        scores,
        knn_scores,
        abnormal,
    })
}

/// AUC of the center-distance score with a freshly initialized encoder and
/// k-means centers, without any training.
pub fn untrained_auc(cfg: &ExperimentConfig, train: &TrainingView, data: &Dataset, seed: u64) -> Result<f64> {
    let enc = Encoder::init_detector(train.features.cols(), &cfg.model, seed)?;
    let det = Detector::initialize(cfg, enc, train, seed)?;
    auc_of(&det.scores(&data.features())?, &data.abnormal_mask())
}

/// One line of the metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub replicate: usize,
    pub split: String,
    pub auc: f64,
    pub auc_knn: f64,
    pub epoch_auc: Vec<f64>,
    pub live_centers: Vec<usize>,
    /// kNN score AUC in the pretext body space.
    pub auc_knn_pretext: f64,
    /// Center-distance AUC before any training.
    pub auc_untrained: f64,
}

#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    /// Validation then test.
    pub records: Vec<MetricsRecord>,
    pub state: RunState,
}

impl ReplicateOutcome {
    pub fn record(&self, split: &str) -> Option<&MetricsRecord> {
        self.records.iter().find(|r| r.split == split)
    }
}

/// Seed of replicate `r`.
pub fn replicate_seed(cfg: &ExperimentConfig, replicate: usize) -> u64 {
    cfg.seed.wrapping_add(replicate as u64)
}

/// Runs one replicate end to end. Without `data`, the splits are generated
/// from the replicate seed.
pub fn run_replicate(cfg: &ExperimentConfig, replicate: usize, data: Option<&Splits>) -> Result<ReplicateOutcome> {
    let seed = replicate_seed(cfg, replicate);
    let splits = match data {
        Some(s) => Cow::Borrowed(s),
        None => Cow::Owned(generate_synthetic(&cfg.data, seed)?),
    };
    let train = splits.train.training_view();
    let monitor = Monitor {
        features: splits.val.features(),
        abnormal: splits.val.abnormal_mask(),
    };
    let mut trainer = Trainer::new(cfg, &train, Some(&monitor), seed)?;
    trainer.run_to_end()?;
    let state = trainer.into_state();

    let mut records = Vec::with_capacity(2);
    for (name, ds) in [("val", &splits.val), ("test", &splits.test)] {
        let mad = evaluate_split(&state, cfg, &train, ds, EmbeddingSpace::Mad)?;
        let pre = evaluate_split(&state, cfg, &train, ds, EmbeddingSpace::Pretext)?;
        records.push(MetricsRecord {
            replicate,
            split: name.into(),
            auc: mad.auc,
            auc_knn: mad.auc_knn,
            epoch_auc: state.history.epoch_auc.clone(),
            live_centers: state.history.live_centers.clone(),
            auc_knn_pretext: pre.auc_knn,
            auc_untrained: untrained_auc(cfg, &train, ds, seed)?,
        });
    }
    Ok(ReplicateOutcome {
        replicate,
        seed,
        records,
        state,
    })
}

/// Statistics over completed replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub completed: usize,
    pub failed: usize,
    pub val_auc: ReplicateStats,
    pub test_auc: ReplicateStats,
    pub test_auc_knn: ReplicateStats,
    pub test_auc_knn_pretext: ReplicateStats,
    pub test_auc_untrained: ReplicateStats,
    pub final_live_centers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub error: String,
    /// The replicate aborted on a NaN or infinite value.
    pub numeric: bool,
}

/// Contents of the metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub config_hash: String,
    pub records: Vec<MetricsRecord>,
    pub failures: Vec<ReplicateFailure>,
    pub aggregate: Option<Aggregate>,
}

impl Metrics {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Per-replicate values of `field` on `split`, in replicate order.
    pub fn values(&self, split: &str, field: fn(&MetricsRecord) -> f64) -> Vec<f64> {
        self.records.iter().filter(|r| r.split == split).map(field).collect()
    }
}

pub struct ExperimentResult {
    pub outcomes: Vec<ReplicateOutcome>,
    pub metrics: Metrics,
}

fn aggregate(outcomes: &[ReplicateOutcome], failed: usize) -> Result<Option<Aggregate>> {
    if outcomes.is_empty() {
        return Ok(None);
    }
    let stats = |split: &str, f: fn(&MetricsRecord) -> f64| -> Result<ReplicateStats> {
        let v: Vec<f64> = outcomes.iter().filter_map(|o| o.record(split)).map(f).collect();
        replicate_ci(&v)
    };
    Ok(Some(Aggregate {
        completed: outcomes.len(),
        failed,
        val_auc: stats("val", |r| r.auc)?,
        test_auc: stats("test", |r| r.auc)?,
        test_auc_knn: stats("test", |r| r.auc_knn)?,
        test_auc_knn_pretext: stats("test", |r| r.auc_knn_pretext)?,
        test_auc_untrained: stats("test", |r| r.auc_untrained)?,
        final_live_centers: outcomes
            .iter()
            .map(|o| o.state.history.live_centers.last().copied().unwrap_or(0))
            .collect(),
    }))
}

/// Runs all replicates on worker threads and aggregates the ones that
/// complete. Failures are recorded, not propagated.
pub fn run_experiment(cfg: &ExperimentConfig, data: Option<&Splits>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let results: Vec<Result<ReplicateOutcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..cfg.replicates)
            .map(|r| s.spawn(move || run_replicate(cfg, r, data)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::State("replicate thread panicked".into()))))
            .collect()
    });

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                log::error!("replicate {r} failed: {e}");
                failures.push(ReplicateFailure {
                    replicate: r,
                    numeric: matches!(e, Error::NonFinite(_)),
                    error: e.to_string(),
                });
            }
        }
    }
    let aggregate = aggregate(&outcomes, failures.len())?;
    let metrics = Metrics {
        config_hash: cfg.hash(),
        records: outcomes.iter().flat_map(|o| o.records.iter().cloned()).collect(),
        failures,
        aggregate,
    };
    Ok(ExperimentResult { outcomes, metrics })
}
