use crate::data::Label;
use crate::error::{shape_err, Error, Result};
use crate::numcore::Matrix;
use crate::spheres::CenterSet;

/// Default floor on the squared distance in the known-abnormal term.
pub const DEFAULT_EPS_D: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct MadBatch<'a> {
    pub embeddings: &'a Matrix,
    pub labels: &'a [Label],
    pub eta: f64,
    /// Unlabeled samples in the whole training set (n).
    pub n_total: usize,
    /// Labeled samples in the whole training set (m).
    pub m_total: usize,
    pub eps_d: f64,
}

#[derive(Debug, Clone)]
pub struct MadOutput {
    pub loss: f64,
    pub gradients: Matrix,
    /// Gradient with respect to the center coordinates (zero rows for
    /// centers nothing was assigned to).
    pub center_gradients: Matrix,
    /// Nearest live center per row.
    pub assignments: Vec<usize>,
}

/// Multi-sphere semi-supervised objective on one batch, without the weight
/// penalty (applied as decoupled decay by the optimizer).
///
/// With `d²` the squared distance to the nearest live center and
/// `s = 1/(n + m)`:
/// - Unlabeled: `s · d²`
/// - KnownNormal: `η · s · d²`
/// - KnownAbnormal: `η · s / max(d², eps_d)`
///
/// Per-batch values are partial sums of the full-dataset objective.
pub fn mad_loss(batch: MadBatch<'_>, centers: &CenterSet) -> Result<MadOutput> {
    let z = batch.embeddings;
    if batch.labels.len() != z.rows() {
        return Err(shape_err("mad_loss labels", z.rows(), batch.labels.len()));
    }
    if z.cols() != centers.dim() {
        return Err(shape_err("mad_loss embedding width", centers.dim(), z.cols()));
    }
    if !(batch.eta >= 0.0 && batch.eta.is_finite()) {
        return Err(Error::Domain(format!("eta must be >= 0, got {}", batch.eta)));
    }
    if batch.n_total + batch.m_total == 0 {
        return Err(Error::Domain("n + m must be positive".into()));
    }
    if !(batch.eps_d > 0.0) {
        return Err(Error::Domain(format!("eps_d must be > 0, got {}", batch.eps_d)));
    }
    if centers.live_count() == 0 {
        return Err(Error::State("all centers are pruned".into()));
    }

    let scale = 1.0 / (batch.n_total + batch.m_total) as f64;
    let mut loss = 0.0;
    let mut gradients = Matrix::zeros(z.rows(), z.cols());
    let mut center_gradients = Matrix::zeros(centers.initial_count(), centers.dim());
    let mut assignments = Vec::with_capacity(z.rows());

    for (i, (zi, &label)) in z.iter_rows().zip(batch.labels).enumerate() {
        let (k, d2) = centers.nearest(zi)?;
        assignments.push(k);
        // dL/dd² for this row.
        let slope = match label {
            Label::Unlabeled => {
                loss += scale * d2;
                scale
            }
            Label::KnownNormal => {
                loss += batch.eta * scale * d2;
                batch.eta * scale
            }
            Label::KnownAbnormal => {
                if d2 > batch.eps_d {
                    loss += batch.eta * scale / d2;
                    -batch.eta * scale / (d2 * d2)
                } else {
                    loss += batch.eta * scale / batch.eps_d;
                    0.0
                }
            }
        };
        if slope != 0.0 {
            let c = centers.center(k);
            let g = gradients.row_mut(i);
            let cg = center_gradients.row_mut(k);
            for j in 0..zi.len() {
                let v = 2.0 * slope * (zi[j] - c[j]);
                g[j] = v;
                cg[j] -= v;
            }
        }
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("MAD loss is {loss}")));
    }
    Ok(MadOutput {
        loss,
        gradients,
        center_gradients,
        assignments,
    })
}
