//! Experiment configuration and its flat `key=value` text form.
//!
//! ```text
//! # comments start with '#'
//! seed=0
//! finetune.eta=1.0
//! pretrain.milestones=70,90
//! ```
//!
//! Every key has a default; unknown keys are rejected. Serializing and
//! parsing again yields the same config, and the config hash is taken over
//! the serialized text.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::data::{AugmentationConfig, GeneratorConfig};
use crate::error::{Error, Result};
use crate::numcore::UpdateRule;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Hidden widths of the body ψ, all ReLU.
    pub body: Vec<usize>,
    /// Output width of the projection head used for pretraining.
    pub proj_dim: usize,
    /// Output width of the detection head.
    pub mad_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            body: vec![64, 32],
            proj_dim: 16,
            mad_dim: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub milestones: Vec<usize>,
    pub lr_factor: f64,
    pub temperature: f64,
    pub optimizer: UpdateRule,
    pub weight_decay: f64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch: 24,
            lr: 1e-3,
            milestones: vec![70, 90],
            lr_factor: 0.1,
            temperature: 0.5,
            optimizer: UpdateRule::AdamDefault,
            weight_decay: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub milestones: Vec<usize>,
    pub lr_factor: f64,
    pub optimizer: UpdateRule,
    pub eta: f64,
    pub gamma: f64,
    /// Initial number of hypersphere centers N_s.
    pub n_s: usize,
    /// Weight penalty, applied as decoupled weight decay.
    pub lambda: f64,
    pub eps_d: f64,
    /// Also move the centers by gradient descent (they stay fixed by default).
    pub update_centers: bool,
    pub kmeans_iters: usize,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch: 32,
            lr: 3e-3,
            milestones: Vec::new(),
            lr_factor: 0.1,
            optimizer: UpdateRule::AdamDefault,
            eta: 1.0,
            gamma: 0.05,
            n_s: 100,
            lambda: 1e-6,
            eps_d: crate::losses::DEFAULT_EPS_D,
            update_centers: false,
            kmeans_iters: crate::spheres::DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub replicates: usize,
    pub data: GeneratorConfig,
    pub augment: AugmentationConfig,
    pub model: ModelConfig,
    pub pretrain: PretrainConfig,
    pub finetune: FinetuneConfig,
    /// Neighbours for the kNN baseline score.
    pub knn_k: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            replicates: 4,
            data: GeneratorConfig::default(),
            augment: AugmentationConfig::default(),
            model: ModelConfig::default(),
            pretrain: PretrainConfig::default(),
            finetune: FinetuneConfig::default(),
            knn_k: crate::eval::DEFAULT_K,
        }
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

impl ExperimentConfig {
    /// All keys with their current values, in serialization order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let d = &self.data;
        let a = &self.augment;
        let m = &self.model;
        let p = &self.pretrain;
        let f = &self.finetune;
        vec![
            ("seed", self.seed.to_string()),
            ("replicates", self.replicates.to_string()),
            ("data.dim", d.dim.to_string()),
            ("data.modes", d.modes.to_string()),
            ("data.signal_dim", d.signal_dim.to_string()),
            ("data.n_train", d.n_train.to_string()),
            ("data.n_val", d.n_val.to_string()),
            ("data.n_test", d.n_test.to_string()),
            ("data.contamination", d.contamination.to_string()),
            ("data.eval_contamination", d.eval_contamination.to_string()),
            ("data.labeled_ratio", d.labeled_ratio.to_string()),
            ("data.labeled_abnormal_fraction", d.labeled_abnormal_fraction.to_string()),
            ("data.mode_sigma", d.mode_sigma.to_string()),
            ("data.center_radius", d.center_radius.to_string()),
            ("data.midpoint_fraction", d.midpoint_fraction.to_string()),
            ("data.noise_min", d.noise_min.to_string()),
            ("data.noise_max", d.noise_max.to_string()),
            ("data.group_size", d.group_size.to_string()),
            ("augment.noise_sigma", a.noise_sigma.to_string()),
            ("augment.scale_jitter", a.scale_jitter.to_string()),
            ("augment.dropout_prob", a.dropout_prob.to_string()),
            ("model.body", join(&m.body)),
            ("model.proj_dim", m.proj_dim.to_string()),
            ("model.mad_dim", m.mad_dim.to_string()),
            ("pretrain.epochs", p.epochs.to_string()),
            ("pretrain.batch", p.batch.to_string()),
            ("pretrain.lr", p.lr.to_string()),
            ("pretrain.milestones", join(&p.milestones)),
            ("pretrain.lr_factor", p.lr_factor.to_string()),
            ("pretrain.tau", p.temperature.to_string()),
            ("pretrain.optimizer", p.optimizer.to_string()),
            ("pretrain.weight_decay", p.weight_decay.to_string()),
            ("finetune.epochs", f.epochs.to_string()),
            ("finetune.batch", f.batch.to_string()),
            ("finetune.lr", f.lr.to_string()),
            ("finetune.milestones", join(&f.milestones)),
            ("finetune.lr_factor", f.lr_factor.to_string()),
            ("finetune.optimizer", f.optimizer.to_string()),
            ("finetune.eta", f.eta.to_string()),
            ("finetune.gamma", f.gamma.to_string()),
            ("finetune.n_s", f.n_s.to_string()),
            ("finetune.lambda", f.lambda.to_string()),
            ("finetune.eps_d", f.eps_d.to_string()),
            ("finetune.update_centers", f.update_centers.to_string()),
            ("finetune.kmeans_iters", f.kmeans_iters.to_string()),
            ("eval.knn_k", self.knn_k.to_string()),
        ]
    }

    /// Sets one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let d = &mut self.data;
        let a = &mut self.augment;
        let m = &mut self.model;
        let p = &mut self.pretrain;
        let f = &mut self.finetune;
        match key {
            "seed" => self.seed = parse_num(key, v)?,
            "replicates" => self.replicates = parse_num(key, v)?,
            "data.dim" => d.dim = parse_num(key, v)?,
            "data.modes" => d.modes = parse_num(key, v)?,
            "data.signal_dim" => d.signal_dim = parse_num(key, v)?,
            "data.n_train" => d.n_train = parse_num(key, v)?,
            "data.n_val" => d.n_val = parse_num(key, v)?,
            "data.n_test" => d.n_test = parse_num(key, v)?,
            "data.contamination" => d.contamination = parse_num(key, v)?,
            "data.eval_contamination" => d.eval_contamination = parse_num(key, v)?,
            "data.labeled_ratio" => d.labeled_ratio = parse_num(key, v)?,
            "data.labeled_abnormal_fraction" => d.labeled_abnormal_fraction = parse_num(key, v)?,
            "data.mode_sigma" => d.mode_sigma = parse_num(key, v)?,
            "data.center_radius" => d.center_radius = parse_num(key, v)?,
            "data.midpoint_fraction" => d.midpoint_fraction = parse_num(key, v)?,
            "data.noise_min" => d.noise_min = parse_num(key, v)?,
            "data.noise_max" => d.noise_max = parse_num(key, v)?,
            "data.group_size" => d.group_size = parse_num(key, v)?,
            "augment.noise_sigma" => a.noise_sigma = parse_num(key, v)?,
            "augment.scale_jitter" => a.scale_jitter = parse_num(key, v)?,
            "augment.dropout_prob" => a.dropout_prob = parse_num(key, v)?,
            "model.body" => m.body = parse_list(key, v)?,
            "model.proj_dim" => m.proj_dim = parse_num(key, v)?,
            "model.mad_dim" => m.mad_dim = parse_num(key, v)?,
            "pretrain.epochs" => p.epochs = parse_num(key, v)?,
            "pretrain.batch" => p.batch = parse_num(key, v)?,
            "pretrain.lr" => p.lr = parse_num(key, v)?,
            "pretrain.milestones" => p.milestones = parse_list(key, v)?,
            "pretrain.lr_factor" => p.lr_factor = parse_num(key, v)?,
            "pretrain.tau" => p.temperature = parse_num(key, v)?,
            "pretrain.optimizer" => p.optimizer = v.parse()?,
            "pretrain.weight_decay" => p.weight_decay = parse_num(key, v)?,
            "finetune.epochs" => f.epochs = parse_num(key, v)?,
            "finetune.batch" => f.batch = parse_num(key, v)?,
            "finetune.lr" => f.lr = parse_num(key, v)?,
            "finetune.milestones" => f.milestones = parse_list(key, v)?,
            "finetune.lr_factor" => f.lr_factor = parse_num(key, v)?,
            "finetune.optimizer" => f.optimizer = v.parse()?,
            "finetune.eta" => f.eta = parse_num(key, v)?,
            "finetune.gamma" => f.gamma = parse_num(key, v)?,
            "finetune.n_s" => f.n_s = parse_num(key, v)?,
            "finetune.lambda" => f.lambda = parse_num(key, v)?,
            "finetune.eps_d" => f.eps_d = parse_num(key, v)?,
            "finetune.update_centers" => f.update_centers = parse_bool(key, v)?,
            "finetune.kmeans_iters" => f.kmeans_iters = parse_num(key, v)?,
            "eval.knn_k" => self.knn_k = parse_num(key, v)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got `{assignment}`")))?;
        self.set(k.trim(), v)
    }

    /// Parses config text on top of the defaults, then validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected KEY=VALUE", n + 1)))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", n + 1)));
            }
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            writeln!(out, "{k}={v}").unwrap();
        }
        out
    }

    /// First 16 hex digits of SHA-256 over the serialized config.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.serialize().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        self.data.validate()?;
        self.augment.validate()?;
        if self.replicates == 0 {
            return fail("replicates must be >= 1".into());
        }
        if self.model.body.is_empty() || self.model.body.contains(&0) {
            return fail("model.body needs at least one positive width".into());
        }
        if self.model.proj_dim == 0 || self.model.mad_dim == 0 {
            return fail("model.proj_dim and model.mad_dim must be >= 1".into());
        }
        let p = &self.pretrain;
        if p.batch < 2 {
            return fail(format!("pretrain.batch must be >= 2, got {}", p.batch));
        }
        if !(p.temperature > 0.0) {
            return fail(format!("pretrain.tau must be > 0, got {}", p.temperature));
        }
        let f = &self.finetune;
        if f.batch == 0 || f.n_s == 0 || f.kmeans_iters == 0 {
            return fail("finetune.batch, finetune.n_s and finetune.kmeans_iters must be >= 1".into());
        }
        if !(f.gamma > 0.0 && f.gamma < 1.0) {
            return fail(format!("finetune.gamma must be in (0, 1), got {}", f.gamma));
        }
        if !(f.eta >= 0.0) {
            return fail(format!("finetune.eta must be >= 0, got {}", f.eta));
        }
        if !(f.eps_d > 0.0) {
            return fail(format!("finetune.eps_d must be > 0, got {}", f.eps_d));
        }
        for (name, lr, wd, ms, factor) in [
            ("pretrain", p.lr, p.weight_decay, &p.milestones, p.lr_factor),
            ("finetune", f.lr, f.lambda, &f.milestones, f.lr_factor),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return fail(format!("{name}.lr must be > 0, got {lr}"));
            }
            if !(wd >= 0.0) {
                return fail(format!("{name} weight decay must be >= 0, got {wd}"));
            }
            if ms.windows(2).any(|w| w[0] >= w[1]) {
                return fail(format!("{name}.milestones must be strictly increasing"));
            }
            if !(factor > 0.0) {
                return fail(format!("{name}.lr_factor must be > 0, got {factor}"));
            }
        }
        if self.knn_k == 0 {
            return fail("eval.knn_k must be >= 1".into());
        }
        Ok(())
    }
}
