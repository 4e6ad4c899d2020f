//! Hypersphere centers: k-means initialization, cardinality accounting,
//! pruning, and the nearest-center anomaly score.

mod centers;
mod kmeans;

pub use centers::{anomaly_score, anomaly_scores, CenterSet, TrajectoryRecord};
pub use kmeans::{kmeans, KMeans, DEFAULT_MAX_ITERS};
