use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// What the trainer is allowed to know about a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Unlabeled,
    /// ỹ = +1.
    KnownNormal,
    /// ỹ = −1.
    KnownAbnormal,
}

impl Label {
    /// Samples the training objective treats as normal.
    pub fn is_presumed_normal(self) -> bool {
        matches!(self, Label::Unlabeled | Label::KnownNormal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Unlabeled => "unlabeled",
            Label::KnownNormal => "normal",
            Label::KnownAbnormal => "abnormal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "unlabeled" => Ok(Label::Unlabeled),
            "normal" => Ok(Label::KnownNormal),
            "abnormal" => Ok(Label::KnownAbnormal),
            other => Err(Error::Schema(format!("unknown label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroundTruth {
    Normal,
    Abnormal,
}

impl GroundTruth {
    pub fn is_abnormal(self) -> bool {
        self == GroundTruth::Abnormal
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GroundTruth::Normal => "normal",
            GroundTruth::Abnormal => "abnormal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(GroundTruth::Normal),
            "abnormal" => Ok(GroundTruth::Abnormal),
            other => Err(Error::Schema(format!("unknown ground truth `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn file_stem(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: Label,
    pub ground_truth: GroundTruth,
    /// Generating mode; diagnostics only.
    pub mode_id: usize,
    /// Samples sharing a group never straddle splits.
    pub group_id: u64,
}

impl Sample {
    /// A known label must agree with the ground truth.
    pub fn is_consistent(&self) -> bool {
        match self.label {
            Label::Unlabeled => true,
            Label::KnownNormal => self.ground_truth == GroundTruth::Normal,
            Label::KnownAbnormal => self.ground_truth == GroundTruth::Abnormal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub split: Split,
    pub dim: usize,
    pub samples: Vec<Sample>,
}

/// Features and labels only. This is everything training code receives.
#[derive(Debug, Clone)]
pub struct TrainingView {
    pub features: Matrix,
    pub labels: Vec<Label>,
}

impl TrainingView {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Row indices of Unlabeled and KnownNormal samples.
    pub fn presumed_normal_indices(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_presumed_normal())
            .map(|(i, _)| i)
            .collect()
    }

    /// Counts of (unlabeled, labeled) samples, the `n` and `m` of the objective.
    pub fn label_counts(&self) -> (usize, usize) {
        let n = self.labels.iter().filter(|&&l| l == Label::Unlabeled).count();
        (n, self.labels.len() - n)
    }
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn features(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.samples.len() * self.dim);
        for s in &self.samples {
            data.extend_from_slice(&s.features);
        }
        Matrix::from_vec(self.samples.len(), self.dim, data).expect("sample widths checked on construction")
    }

    pub fn training_view(&self) -> TrainingView {
        TrainingView {
            features: self.features(),
            labels: self.samples.iter().map(|s| s.label).collect(),
        }
    }

    /// `true` for abnormal samples, for evaluation.
    pub fn abnormal_mask(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.ground_truth.is_abnormal()).collect()
    }

    pub fn abnormal_count(&self) -> usize {
        self.samples.iter().filter(|s| s.ground_truth.is_abnormal()).count()
    }

    pub fn group_ids(&self) -> std::collections::BTreeSet<u64> {
        self.samples.iter().map(|s| s.group_id).collect()
    }

    /// Checks widths, finiteness and label consistency.
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            if s.features.len() != self.dim {
                return Err(Error::Schema(format!(
                    "sample {i} has {} features, expected {}",
                    s.features.len(),
                    self.dim
                )));
            }
            if s.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::Schema(format!("sample {i} has a non-finite feature")));
            }
            if !s.is_consistent() {
                return Err(Error::Schema(format!(
                    "sample {i} is labeled {} but is {}",
                    s.label.as_str(),
                    s.ground_truth.as_str()
                )));
            }
        }
        Ok(())
    }
}
