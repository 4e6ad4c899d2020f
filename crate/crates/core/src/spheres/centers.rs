use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::numcore::{squared_distance, Matrix};

/// Hypersphere centers with their live/pruned status and the normal-sample
/// cardinality from the last [`CenterSet::assign_and_count`].
///
/// Pruned centers stay in the set (tombstoned) so logs can report the full
/// trajectory; they never receive assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSet {
    centers: Matrix,
    live: Vec<bool>,
    counts: Vec<usize>,
    gamma: f64,
}

impl CenterSet {
    pub fn new(centers: Matrix, gamma: f64) -> Result<Self> {
        if centers.rows() == 0 {
            return Err(Error::Domain("a center set needs at least one center".into()));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Config(format!("gamma must be in (0, 1), got {gamma}")));
        }
        if !centers.is_finite() {
            return Err(Error::NonFinite("center coordinates".into()));
        }
        let n = centers.rows();
        Ok(Self {
            centers,
            live: vec![true; n],
            counts: vec![0; n],
            gamma,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// N_s, the number of centers the set started with.
    pub fn initial_count(&self) -> usize {
        self.centers.rows()
    }

    pub fn dim(&self) -> usize {
        self.centers.cols()
    }

    pub fn live_count(&self) -> usize {
        self.live.iter().filter(|l| **l).count()
    }

    pub fn is_live(&self, i: usize) -> bool {
        self.live[i]
    }

    pub fn live_mask(&self) -> &[bool] {
        &self.live
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Overwrites the per-center cardinalities; pruned centers must stay at 0.
    pub fn set_counts(&mut self, counts: Vec<usize>) -> Result<()> {
        if counts.len() != self.counts.len() {
            return Err(shape_err("center counts", self.counts.len(), counts.len()));
        }
        if let Some(i) = (0..counts.len()).find(|&i| !self.live[i] && counts[i] > 0) {
            return Err(Error::State(format!("pruned center {i} cannot hold assignments")));
        }
        self.counts = counts;
        Ok(())
    }

    pub fn centers(&self) -> &Matrix {
        &self.centers
    }

    pub(crate) fn centers_mut(&mut self) -> &mut Matrix {
        &mut self.centers
    }

    pub fn center(&self, i: usize) -> &[f64] {
        self.centers.row(i)
    }

    /// Nearest live center and the squared distance to it. Ties go to the
    /// lowest index.
    pub fn nearest(&self, z: &[f64]) -> Result<(usize, f64)> {
        if z.len() != self.dim() {
            return Err(shape_err("embedding width", self.dim(), z.len()));
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.centers.iter_rows().enumerate() {
            if !self.live[i] {
                continue;
            }
            let d2 = squared_distance(z, c);
            if best.is_none_or(|(_, b)| d2 < b) {
                best = Some((i, d2));
            }
        }
        best.ok_or_else(|| Error::State("all centers are pruned".into()))
    }

    /// Assigns every row to its nearest live center and stores the counts N_i.
    pub fn assign_and_count(&mut self, embeddings: &Matrix) -> Result<&[usize]> {
        let mut counts = vec![0; self.counts.len()];
        for z in embeddings.iter_rows() {
            let (k, _) = self.nearest(z)?;
            counts[k] += 1;
        }
        self.counts = counts;
        Ok(&self.counts)
    }

    /// Prunes every live center with `N_i < γ · max_j N_j`, all judged against
    /// the same pre-prune maximum. The largest center always survives.
    /// Returns the indices pruned by this call.
    pub fn prune(&mut self) -> Vec<usize> {
        let live: Vec<usize> = (0..self.live.len()).filter(|&i| self.live[i]).collect();
        let Some(&keeper) = live.iter().max_by(|&&a, &&b| {
            // Max count; lowest index among equals.
            self.counts[a].cmp(&self.counts[b]).then(b.cmp(&a))
        }) else {
            return Vec::new();
        };
        let threshold = self.gamma * self.counts[keeper] as f64;
        let mut doomed: Vec<usize> = live
            .iter()
            .copied()
            .filter(|&i| (self.counts[i] as f64) < threshold)
            .collect();
        if doomed.len() == live.len() {
            log::warn!("pruning would remove every center; keeping center {keeper}");
            doomed.retain(|&i| i != keeper);
        }
        for &i in &doomed {
            self.live[i] = false;
        }
        doomed
    }
}

/// s(z) = min over live centers of ‖z − c_j‖.
pub fn anomaly_score(z: &[f64], centers: &CenterSet) -> Result<f64> {
    centers.nearest(z).map(|(_, d2)| d2.sqrt())
}

/// Scores every row of `embeddings`.
pub fn anomaly_scores(embeddings: &Matrix, centers: &CenterSet) -> Result<Vec<f64>> {
    embeddings.iter_rows().map(|z| anomaly_score(z, centers)).collect()
}

/// One line of the center-trajectory log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub epoch: usize,
    pub live: usize,
    pub counts: Vec<usize>,
}

impl TrajectoryRecord {
    pub fn of(epoch: usize, centers: &CenterSet) -> Self {
        Self {
            epoch,
            live: centers.live_count(),
            counts: centers.counts().to_vec(),
        }
    }
}
