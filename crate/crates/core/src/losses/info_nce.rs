use crate::error::{shape_err, Error, Result};
use crate::numcore::{dot, norm, Matrix};

/// `uᵀv / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(shape_err("cosine_similarity", u.len(), v.len()));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cosine similarity of a zero vector".into()));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// `2N × d` embeddings where rows `2i` and `2i + 1` are the two views of
/// source sample `i`.
#[derive(Debug, Clone, Copy)]
pub struct ContrastiveBatch<'a> {
    pub embeddings: &'a Matrix,
    pub temperature: f64,
}

#[derive(Debug, Clone)]
pub struct InfoNceOutput {
    pub loss: f64,
    pub gradients: Matrix,
    /// True when the batch has a single pair, so every anchor's denominator
    /// holds only its positive and the loss is identically zero.
    pub degenerate: bool,
}

/// InfoNCE summed over both anchors of every positive pair.
///
/// For anchor `i` with positive `p(i)`:
/// `ℓ_i = −s_{i,p(i)}/τ + log Σ_{k≠i} exp(s_ik/τ)` with `s` the cosine
/// similarity. The returned gradients are exact derivatives of the summed
/// loss with respect to every embedding row.
pub fn info_nce_loss(batch: ContrastiveBatch<'_>) -> Result<InfoNceOutput> {
    let z = batch.embeddings;
    let tau = batch.temperature;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("temperature must be > 0, got {tau}")));
    }
    let rows = z.rows();
    if rows == 0 || rows % 2 != 0 {
        return Err(shape_err("contrastive batch rows (even, >= 2)", "2N", rows));
    }
    let degenerate = rows < 4;
    if degenerate {
        log::debug!("InfoNCE batch with a single pair; loss is identically zero");
    }

    let norms: Vec<f64> = z.iter_rows().map(norm).collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::Domain(format!("embedding row {i} has zero norm")));
    }
    let mut unit = z.clone();
    for (i, &n) in norms.iter().enumerate() {
        unit.row_mut(i).iter_mut().for_each(|v| *v /= n);
    }

    let mut sim = Matrix::zeros(rows, rows);
    for i in 0..rows {
        for k in i..rows {
            let s = dot(unit.row(i), unit.row(k)).clamp(-1.0, 1.0);
            sim[(i, k)] = s;
            sim[(k, i)] = s;
        }
    }

    // coef[(i, k)] = ∂L/∂s_ik from anchor i's term.
    let mut coef = Matrix::zeros(rows, rows);
    let mut loss = 0.0;
    for i in 0..rows {
        let pos = i ^ 1;
        let max = (0..rows)
            .filter(|&k| k != i)
            .map(|k| sim[(i, k)] / tau)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for k in (0..rows).filter(|&k| k != i) {
            let e = (sim[(i, k)] / tau - max).exp();
            coef[(i, k)] = e;
            denom += e;
        }
        loss += max + denom.ln() - sim[(i, pos)] / tau;
        for k in (0..rows).filter(|&k| k != i) {
            coef[(i, k)] /= denom * tau;
        }
        coef[(i, pos)] -= 1.0 / tau;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("InfoNCE loss is {loss}")));
    }

    // ∂L/∂û_i = Σ_k (coef_ik + coef_ki) û_k, then project onto the tangent
    // space of the normalization and divide by ‖z_i‖.
    let dim = z.cols();
    let mut gradients = Matrix::zeros(rows, dim);
    let mut du = vec![0.0; dim];
    for i in 0..rows {
        du.fill(0.0);
        for k in 0..rows {
            let c = coef[(i, k)] + coef[(k, i)];
            if c != 0.0 {
                du.iter_mut().zip(unit.row(k)).for_each(|(d, u)| *d += c * u);
            }
        }
        let ui = unit.row(i);
        let radial = dot(&du, ui);
        for ((g, d), u) in gradients.row_mut(i).iter_mut().zip(&du).zip(ui) {
            *g = (d - radial * u) / norms[i];
        }
    }
    Ok(InfoNceOutput {
        loss,
        gradients,
        degenerate,
    })
}
