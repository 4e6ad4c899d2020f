//! A single training run as an explicit state machine, so it can be
//! checkpointed at any epoch boundary and resumed bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::encoder::{transfer_weights, Encoder};
use super::loops::{pretrain_epoch, Detector};
use crate::data::TrainingView;
use crate::error::{Error, Result};
use crate::eval::{auc, ScoredSet};
use crate::numcore::{Matrix, Optimizer};
use crate::spheres::TrajectoryRecord;

pub const CHECKPOINT_FORMAT: u32 = 1;

/// Where a run stands. Epoch counters name the next epoch to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Pretrain { next_epoch: usize },
    Finetune { next_epoch: usize },
    Done,
}

/// Per-epoch records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    /// Mean per-anchor InfoNCE loss of each pretraining epoch.
    pub pretrain_loss: Vec<f64>,
    /// Full-train objective at each fine-tuning epoch boundary; entry 0 is
    /// taken right after the centers are placed.
    pub objective: Vec<f64>,
    /// Validation AUC after each fine-tuning epoch.
    pub epoch_auc: Vec<f64>,
    /// Validation AUC right after center initialization, before any fine-tuning.
    pub initial_auc: Option<f64>,
    /// Live centers after each fine-tuning epoch's pruning.
    pub live_centers: Vec<usize>,
    /// Center trajectory; epoch 0 is the initial placement.
    pub trajectory: Vec<TrajectoryRecord>,
}

/// Everything needed to continue a run. Random streams are derived from
/// `seed` and the epoch index, so no generator state has to be stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub seed: u64,
    pub stage: Stage,
    pub pretext: Encoder,
    pub pretext_optimizer: Optimizer,
    pub detector: Option<Detector>,
    pub history: History,
}

/// Validation features with ground truth, used only for monitoring.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub features: Matrix,
    pub abnormal: Vec<bool>,
}

impl Monitor {
    fn auc(&self, detector: &Detector) -> Result<Option<f64>> {
        if self.abnormal.iter().all(|&a| a) || !self.abnormal.iter().any(|&a| a) {
            return Ok(None);
        }
        let scores = detector.scores(&self.features)?;
        auc(ScoredSet {
            scores: &scores,
            positive: &self.abnormal,
        })
        .map(Some)
    }
}

pub struct Trainer<'a> {
    cfg: &'a ExperimentConfig,
    train: &'a TrainingView,
    monitor: Option<&'a Monitor>,
    state: RunState,
}

impl<'a> Trainer<'a> {
    pub fn new(cfg: &'a ExperimentConfig, train: &'a TrainingView, monitor: Option<&'a Monitor>, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if train.is_empty() {
            return Err(Error::Domain("training set is empty".into()));
        }
        let p = &cfg.pretrain;
        let state = RunState {
            seed,
            stage: Stage::Pretrain { next_epoch: 0 },
            pretext: Encoder::init_pretext(train.features.cols(), &cfg.model, seed)?,
            pretext_optimizer: Optimizer::new(p.optimizer, p.lr, p.weight_decay)?,
            detector: None,
            history: History::default(),
        };
        Ok(Self {
            cfg,
            train,
            monitor,
            state,
        })
    }

    /// Continues from a checkpoint written under the same configuration.
    pub fn resume(
        cfg: &'a ExperimentConfig,
        train: &'a TrainingView,
        monitor: Option<&'a Monitor>,
        checkpoint: Checkpoint,
    ) -> Result<Self> {
        checkpoint.verify(cfg)?;
        Ok(Self {
            cfg,
            train,
            monitor,
            state: checkpoint.state,
        })
    }

    pub fn state(&self) -> &RunState {
        &self.state
    }

    pub fn into_state(self) -> RunState {
        self.state
    }

    pub fn is_done(&self) -> bool {
        self.state.stage == Stage::Done
    }

    pub fn checkpoint(&self, replicate: usize) -> Checkpoint {
        Checkpoint::new(self.cfg, replicate, self.state.clone())
    }

    /// Advances by one unit of work: a pretraining epoch, the transfer and
    /// center placement, or a fine-tuning epoch. Returns the new stage.
    pub fn step(&mut self) -> Result<Stage> {
        let cfg = self.cfg;
        let seed = self.state.seed;
        self.state.stage = match self.state.stage {
            Stage::Pretrain { next_epoch } if next_epoch < cfg.pretrain.epochs => {
                let s = &mut self.state;
                let loss = pretrain_epoch(
                    &mut s.pretext,
                    &mut s.pretext_optimizer,
                    cfg,
                    &self.train.features,
                    next_epoch,
                    seed,
                )?;
                log::debug!("pretrain epoch {next_epoch}: loss {loss:.6}");
                s.history.pretrain_loss.push(loss);
                Stage::Pretrain {
                    next_epoch: next_epoch + 1,
                }
            }
            Stage::Pretrain { .. } => {
                self.start_finetune()?;
                Stage::Finetune { next_epoch: 0 }
            }
            Stage::Finetune { next_epoch } if next_epoch < cfg.finetune.epochs => {
                self.finetune_epoch(next_epoch)?;
                Stage::Finetune {
                    next_epoch: next_epoch + 1,
                }
            }
            Stage::Finetune { .. } | Stage::Done => Stage::Done,
        };
        Ok(self.state.stage)
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    fn start_finetune(&mut self) -> Result<()> {
        let (cfg, seed) = (self.cfg, self.state.seed);
        let encoder = transfer_weights(&self.state.pretext, &cfg.model, seed)?;
        let detector = Detector::initialize(cfg, encoder, self.train, seed)?;
        let h = &mut self.state.history;
        h.objective.push(detector.objective(cfg, self.train)?);
        h.trajectory.push(TrajectoryRecord::of(0, &detector.centers));
        if let Some(m) = self.monitor {
            h.initial_auc = m.auc(&detector)?;
        }
        self.state.detector = Some(detector);
        Ok(())
    }

    fn finetune_epoch(&mut self, epoch: usize) -> Result<()> {
        let (cfg, seed) = (self.cfg, self.state.seed);
        let detector = self
            .state
            .detector
            .as_mut()
            .ok_or_else(|| Error::State("fine-tuning without a detector".into()))?;
        let loss = detector.train_epoch(cfg, self.train, epoch, seed)?;
        let pruned = detector.prune(self.train)?;
        let h = &mut self.state.history;
        h.objective.push(detector.objective(cfg, self.train)?);
        h.live_centers.push(detector.centers.live_count());
        h.trajectory.push(TrajectoryRecord::of(epoch + 1, &detector.centers));
        if let Some(m) = self.monitor {
            if let Some(a) = m.auc(detector)? {
                h.epoch_auc.push(a);
            }
        }
        log::debug!(
            "finetune epoch {epoch}: loss {loss:.6}, pruned {}, live {}",
            pruned.len(),
            detector.centers.live_count()
        );
        Ok(())
    }
}

/// Serialized run state tagged with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub config_hash: String,
    /// Serialized configuration, so a checkpoint is self-describing.
    pub config: String,
    pub replicate: usize,
    pub state: RunState,
}

impl Checkpoint {
    pub fn new(cfg: &ExperimentConfig, replicate: usize, state: RunState) -> Self {
        Self {
            format: CHECKPOINT_FORMAT,
            config_hash: cfg.hash(),
            config: cfg.serialize(),
            replicate,
            state,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if c.format != CHECKPOINT_FORMAT {
            return Err(Error::Schema(format!(
                "checkpoint format {} is not supported (expected {CHECKPOINT_FORMAT})",
                c.format
            )));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The configuration stored in the checkpoint.
    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(&self.config)
    }

    /// Refuses a checkpoint written under a different configuration.
    pub fn verify(&self, cfg: &ExperimentConfig) -> Result<()> {
        let current = cfg.hash();
        if self.config_hash != current {
            return Err(Error::HashMismatch {
                stored: self.config_hash.clone(),
                current,
            });
        }
        Ok(())
    }
}
