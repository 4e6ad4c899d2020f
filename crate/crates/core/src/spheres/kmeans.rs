//! Lloyd's algorithm with k-means++ seeding.

use rand::Rng as _;

use super::centers::CenterSet;
use crate::error::{Error, Result};
use crate::numcore::{squared_distance, Matrix};
use crate::rng;

pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Debug, Clone)]
pub struct KMeans {
    pub centers: Matrix,
    /// Set when `k` exceeded the number of distinct points.
    pub clamped_from: Option<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of squared distances to assigned centers after each update step.
    pub objective: Vec<f64>,
}

impl KMeans {
    pub fn into_center_set(self, gamma: f64) -> Result<CenterSet> {
        CenterSet::new(self.centers, gamma)
    }
}

fn distinct_rows(points: &Matrix) -> usize {
    let mut rows: Vec<&[f64]> = points.iter_rows().collect();
    let cmp = |a: &&[f64], b: &&[f64]| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    rows.sort_by(cmp);
    rows.dedup_by(|a, b| cmp(&&**a, &&**b).is_eq());
    rows.len()
}

fn nearest(p: &[f64], centers: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter_rows().enumerate() {
        let d = squared_distance(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_seed(points: &Matrix, k: usize, seed: u64) -> Matrix {
    let mut rng = rng::stream(seed, "kmeans.seed", 0);
    let n = points.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = points
        .iter_rows()
        .map(|p| squared_distance(p, points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // Unreachable while k <= distinct points; kept total for safety.
            rng.random_range(0..n)
        };
        chosen.push(next);
        let c = points.row(next);
        for (w, p) in d2.iter_mut().zip(points.iter_rows()) {
            *w = w.min(squared_distance(p, c));
        }
    }
    points.select_rows(&chosen)
}

/// Clusters the rows of `points` into `k` groups.
///
/// `k` is clamped to the number of distinct points. Empty clusters are
/// re-seeded at the point farthest from its current center.
pub fn kmeans(points: &Matrix, k: usize, seed: u64, max_iters: usize) -> Result<KMeans> {
    if points.rows() == 0 {
        return Err(Error::Domain("k-means needs at least one point".into()));
    }
    if k == 0 {
        return Err(Error::Config("k-means needs k >= 1".into()));
    }
    let distinct = distinct_rows(points);
    let clamped_from = (k > distinct).then(|| {
        log::warn!("k-means: k = {k} exceeds {distinct} distinct points; using k = {distinct}");
        k
    });
    let k = k.min(distinct);
    let n = points.rows();
    let dim = points.cols();

    let mut centers = plus_plus_seed(points, k, seed);
    let mut assign = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut objective = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        let mut changed = false;
        for (i, p) in points.iter_rows().enumerate() {
            let (j, d) = nearest(p, &centers);
            if assign[i] != j {
                assign[i] = j;
                changed = true;
            }
            dist[i] = d;
        }
        if !changed {
            converged = true;
            break;
        }

        let mut sums = Matrix::zeros(k, dim);
        let mut sizes = vec![0usize; k];
        for (i, p) in points.iter_rows().enumerate() {
            sizes[assign[i]] += 1;
            sums.row_mut(assign[i]).iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for (j, &size) in sizes.iter().enumerate() {
            if size > 0 {
                let inv = 1.0 / size as f64;
                for (c, s) in centers.row_mut(j).iter_mut().zip(sums.row(j)) {
                    *c = s * inv;
                }
            }
        }
        for j in (0..k).filter(|&j| sizes[j] == 0) {
            // Farthest point from its own center, taken from a cluster that can spare it.
            let far = (0..n)
                .filter(|&i| sizes[assign[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                centers.row_mut(j).copy_from_slice(points.row(i));
                dist[i] = 0.0;
            }
        }
        let obj: f64 = points
            .iter_rows()
            .zip(&assign)
            .map(|(p, &j)| squared_distance(p, centers.row(j)))
            .sum();
        objective.push(obj);
    }

    Ok(KMeans {
        centers,
        clamped_from,
        iterations,
        converged,
        objective,
    })
}
