use crate::error::{shape_err, Error, Result};
use crate::numcore::{squared_distance, Matrix};

pub const DEFAULT_K: usize = 100;

/// Mean Euclidean distance from each query row to its `k` nearest reference
/// rows, by brute force. `k` is clamped to the reference count.
pub fn knn_score(queries: &Matrix, references: &Matrix, k: usize) -> Result<Vec<f64>> {
    if references.rows() == 0 {
        return Err(Error::Domain("kNN score needs a non-empty reference set".into()));
    }
    if k == 0 {
        return Err(Error::Config("kNN score needs k >= 1".into()));
    }
    if queries.cols() != references.cols() {
        return Err(shape_err("knn_score widths", references.cols(), queries.cols()));
    }
    let k = if k > references.rows() {
        log::warn!(
            "kNN score: k = {k} exceeds {} reference points; using k = {}",
            references.rows(),
            references.rows()
        );
        references.rows()
    } else {
        k
    };

    let mut dist = vec![0.0; references.rows()];
    let scores = queries
        .iter_rows()
        .map(|q| {
            for (d, r) in dist.iter_mut().zip(references.iter_rows()) {
                *d = squared_distance(q, r).sqrt();
            }
            if k < dist.len() {
                dist.select_nth_unstable_by(k - 1, f64::total_cmp);
            }
            let nearest = &mut dist[..k];
            // Fixed summation order keeps the score independent of reference order.
            nearest.sort_unstable_by(f64::total_cmp);
            nearest.iter().sum::<f64>() / k as f64
        })
        .collect();
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_on_a_reference_point() {
        let refs = Matrix::from_rows(&[[1.0, 1.0], [5.0, 5.0]]).unwrap();
        let q = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        assert_eq!(knn_score(&q, &refs, 1).unwrap(), vec![0.0]);
    }

    #[test]
    fn two_nearest() {
        let refs = Matrix::from_rows(&[[0.0, 0.0], [4.0, 0.0], [100.0, 0.0]]).unwrap();
        let q = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert_eq!(knn_score(&q, &refs, 2).unwrap(), vec![2.0]);
    }

    #[test]
    fn k_is_clamped() {
        let refs = Matrix::from_rows(&[[0.0], [3.0]]).unwrap();
        let q = Matrix::from_rows(&[[0.0]]).unwrap();
        assert_eq!(knn_score(&q, &refs, 100).unwrap(), vec![1.5]);
    }

    #[test]
    fn empty_reference_set() {
        let q = Matrix::from_rows(&[[0.0]]).unwrap();
        assert!(matches!(knn_score(&q, &Matrix::zeros(0, 1), 3), Err(Error::Domain(_))));
    }
}
