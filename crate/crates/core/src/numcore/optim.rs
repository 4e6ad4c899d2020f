//! Parameter update rules and the step learning-rate schedule.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateRule {
    Sgd,
    /// Adam with β1 = 0.9, β2 = 0.999, eps = 1e-8.
    AdamDefault,
}

impl std::str::FromStr for UpdateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(UpdateRule::Sgd),
            "adam" => Ok(UpdateRule::AdamDefault),
            other => Err(Error::Config(format!("unknown optimizer `{other}` (sgd|adam)"))),
        }
    }
}

impl std::fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UpdateRule::Sgd => "sgd",
            UpdateRule::AdamDefault => "adam",
        })
    }
}

/// Update rule plus its running state.
///
/// Weight decay is decoupled: every step also applies `p ← p − lr·wd·p`.
/// Moment buffers are created lazily on the first step and must keep
/// matching the parameter layout afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    rule: UpdateRule,
    learning_rate: f64,
    weight_decay: f64,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(rule: UpdateRule, learning_rate: f64, weight_decay: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be > 0, got {learning_rate}")));
        }
        if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
            return Err(Error::Config(format!("weight decay must be >= 0, got {weight_decay}")));
        }
        Ok(Self {
            rule,
            learning_rate,
            weight_decay,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        })
    }

    pub fn rule(&self) -> UpdateRule {
        self.rule
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn set_learning_rate(&mut self, lr: f64) -> Result<()> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be > 0, got {lr}")));
        }
        self.learning_rate = lr;
        Ok(())
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update. Nothing is modified if any gradient is non-finite
    /// or the layout does not match.
    pub fn step(&mut self, mut params: Vec<&mut [f64]>, grads: Vec<&[f64]>) -> Result<()> {
        if params.len() != grads.len() {
            return Err(shape_err("optimizer tensors", params.len(), grads.len()));
        }
        for (i, (p, g)) in params.iter().zip(&grads).enumerate() {
            if p.len() != g.len() {
                return Err(shape_err("optimizer tensor length", p.len(), g.len()));
            }
            if let Some(j) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "gradient tensor {i} entry {j} is {}; step aborted",
                    g[j]
                )));
            }
        }
        if self.rule == UpdateRule::AdamDefault {
            if self.first_moment.is_empty() {
                self.first_moment = grads.iter().map(|g| vec![0.0; g.len()]).collect();
                self.second_moment = self.first_moment.clone();
            } else if self.first_moment.len() != grads.len()
                || self.first_moment.iter().zip(&grads).any(|(m, g)| m.len() != g.len())
            {
                return Err(shape_err(
                    "optimizer moment buffers",
                    self.first_moment.len(),
                    grads.len(),
                ));
            }
        }

        self.step += 1;
        let lr = self.learning_rate;
        let wd = self.weight_decay;
        match self.rule {
            UpdateRule::Sgd => {
                for (p, g) in params.iter_mut().zip(&grads) {
                    for (pv, &gv) in p.iter_mut().zip(g.iter()) {
                        *pv -= lr * (gv + wd * *pv);
                    }
                }
            }
            UpdateRule::AdamDefault => {
                let t = self.step as i32;
                let bc1 = 1.0 - ADAM_BETA1.powi(t);
                let bc2 = 1.0 - ADAM_BETA2.powi(t);
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(&grads)
                    .zip(self.first_moment.iter_mut())
                    .zip(self.second_moment.iter_mut())
                {
                    for (((pv, &gv), mv), vv) in p.iter_mut().zip(g.iter()).zip(m).zip(v) {
                        *mv = ADAM_BETA1 * *mv + (1.0 - ADAM_BETA1) * gv;
                        *vv = ADAM_BETA2 * *vv + (1.0 - ADAM_BETA2) * gv * gv;
                        let m_hat = *mv / bc1;
                        let v_hat = *vv / bc2;
                        *pv -= lr * (m_hat / (v_hat.sqrt() + ADAM_EPS) + wd * *pv);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Step schedule: `base_lr × factor^(number of milestones ≤ epoch)`.
pub fn apply_lr_schedule(epoch: usize, base_lr: f64, milestones: &[usize], factor: f64) -> f64 {
    let passed = milestones.iter().filter(|&&m| m <= epoch).count();
    base_lr * factor.powi(passed as i32)
}
