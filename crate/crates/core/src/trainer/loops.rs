//! One-epoch training loops for both phases.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::encoder::{Encoder, EncoderTape};
use crate::data::TrainingView;
use crate::error::{Error, Result};
use crate::losses::{info_nce_loss, mad_loss, ContrastiveBatch, MadBatch};
use crate::numcore::{apply_lr_schedule, Matrix, Optimizer};
use crate::rng;
use crate::spheres::{kmeans, CenterSet};

fn with_context(e: Error, phase: &str, epoch: usize, batch: usize) -> Error {
    match e {
        Error::NonFinite(m) => Error::NonFinite(format!("{phase} epoch {epoch} batch {batch}: {m}")),
        other => other,
    }
}

fn shuffled(n: usize, seed: u64, tag: &str, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, tag, epoch as u64));
    order
}

/// One pass of contrastive pretraining over `features`. Returns the mean
/// per-anchor InfoNCE loss.
///
/// Every sample is used regardless of its label. A trailing batch with a
/// single sample is skipped since it carries no contrastive signal.
pub fn pretrain_epoch(
    encoder: &mut Encoder,
    optimizer: &mut Optimizer,
    cfg: &ExperimentConfig,
    features: &Matrix,
    epoch: usize,
    seed: u64,
) -> Result<f64> {
    let p = &cfg.pretrain;
    optimizer.set_learning_rate(apply_lr_schedule(epoch, p.lr, &p.milestones, p.lr_factor))?;
    let order = shuffled(features.rows(), seed, "pretrain.shuffle", epoch);
    let mut aug_rng = rng::stream(seed, "pretrain.augment", epoch as u64);
    let dim = features.cols();
    let mut tape = EncoderTape::default();
    let (mut total, mut anchors) = (0.0, 0usize);

    for (b, chunk) in order.chunks(p.batch).enumerate() {
        if chunk.len() < 2 {
            continue;
        }
        let mut views = Matrix::zeros(2 * chunk.len(), dim);
        for (i, &idx) in chunk.iter().enumerate() {
            let x = features.row(idx);
            cfg.augment.view_into(x, &mut aug_rng, views.row_mut(2 * i));
            cfg.augment.view_into(x, &mut aug_rng, views.row_mut(2 * i + 1));
        }
        let mut step = || -> Result<f64> {
            let z = encoder.forward_recorded(&views, &mut tape)?;
            let out = info_nce_loss(ContrastiveBatch {
                embeddings: &z,
                temperature: p.temperature,
            })?;
            let grads = encoder.backward(&tape, &out.gradients)?;
            optimizer.step(encoder.params_mut(), grads.slices())?;
            Ok(out.loss)
        };
        let loss = step().map_err(|e| with_context(e, "pretrain", epoch, b))?;
        total += loss;
        anchors += views.rows();
    }
    Ok(if anchors > 0 { total / anchors as f64 } else { 0.0 })
}

/// Detection encoder, its optimizer, and the hypersphere centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub encoder: Encoder,
    pub optimizer: Optimizer,
    pub centers: CenterSet,
    /// Present only when centers are trained too.
    pub center_optimizer: Option<Optimizer>,
    /// Set when k-means had fewer distinct points than N_s.
    pub kmeans_clamped_from: Option<usize>,
}

impl Detector {
    /// Places N_s centers by k-means over the embedded presumed-normal samples.
    pub fn initialize(cfg: &ExperimentConfig, encoder: Encoder, train: &TrainingView, seed: u64) -> Result<Self> {
        let f = &cfg.finetune;
        let normal = train.features.select_rows(&train.presumed_normal_indices());
        let embedded = encoder.embed(&normal)?;
        let km = kmeans(&embedded, f.n_s, rng::derive_seed(seed, "kmeans", 0), f.kmeans_iters)?;
        let clamped = km.clamped_from;
        let centers = km.into_center_set(f.gamma)?;
        let optimizer = Optimizer::new(f.optimizer, f.lr, f.lambda)?;
        let center_optimizer = if f.update_centers {
            Some(Optimizer::new(f.optimizer, f.lr, 0.0)?)
        } else {
            None
        };
        Ok(Self {
            encoder,
            optimizer,
            centers,
            center_optimizer,
            kmeans_clamped_from: clamped,
        })
    }

    pub fn scores(&self, features: &Matrix) -> Result<Vec<f64>> {
        crate::spheres::anomaly_scores(&self.encoder.embed(features)?, &self.centers)
    }

    /// Full-dataset objective (without the weight penalty) at the current parameters.
    pub fn objective(&self, cfg: &ExperimentConfig, train: &TrainingView) -> Result<f64> {
        let z = self.encoder.embed(&train.features)?;
        let (n, m) = train.label_counts();
        Ok(mad_loss(
            MadBatch {
                embeddings: &z,
                labels: &train.labels,
                eta: cfg.finetune.eta,
                n_total: n,
                m_total: m,
                eps_d: cfg.finetune.eps_d,
            },
            &self.centers,
        )?
        .loss)
    }

    /// One fine-tuning pass. Returns the summed batch losses, which add up to
    /// the epoch's objective along the trajectory.
    pub fn train_epoch(&mut self, cfg: &ExperimentConfig, train: &TrainingView, epoch: usize, seed: u64) -> Result<f64> {
        let f = &cfg.finetune;
        let lr = apply_lr_schedule(epoch, f.lr, &f.milestones, f.lr_factor);
        self.optimizer.set_learning_rate(lr)?;
        if let Some(co) = self.center_optimizer.as_mut() {
            co.set_learning_rate(lr)?;
        }
        let (n_total, m_total) = train.label_counts();
        let order = shuffled(train.len(), seed, "finetune.shuffle", epoch);
        let mut tape = EncoderTape::default();
        let mut total = 0.0;
        for (b, chunk) in order.chunks(f.batch).enumerate() {
            let x = train.features.select_rows(chunk);
            let labels: Vec<_> = chunk.iter().map(|&i| train.labels[i]).collect();
            let mut step = || -> Result<f64> {
                let z = self.encoder.forward_recorded(&x, &mut tape)?;
                let out = mad_loss(
                    MadBatch {
                        embeddings: &z,
                        labels: &labels,
                        eta: f.eta,
                        n_total,
                        m_total,
                        eps_d: f.eps_d,
                    },
                    &self.centers,
                )?;
                let grads = self.encoder.backward(&tape, &out.gradients)?;
                self.optimizer.step(self.encoder.params_mut(), grads.slices())?;
                if let Some(co) = self.center_optimizer.as_mut() {
                    co.step(
                        vec![self.centers.centers_mut().as_mut_slice()],
                        vec![out.center_gradients.as_slice()],
                    )?;
                }
                Ok(out.loss)
            };
            total += step().map_err(|e| with_context(e, "finetune", epoch, b))?;
        }
        Ok(total)
    }

    /// Recounts presumed-normal assignments and prunes small centers.
    /// Returns the indices pruned.
    pub fn prune(&mut self, train: &TrainingView) -> Result<Vec<usize>> {
        let normal = train.features.select_rows(&train.presumed_normal_indices());
        let z = self.encoder.embed(&normal)?;
        self.centers.assign_and_count(&z)?;
        let pruned = self.centers.prune();
        Ok(pruned)
    }
}
