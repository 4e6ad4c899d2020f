//! Evaluation: ROC-AUC, the k-nearest-neighbour baseline score, replicate
//! confidence intervals and the Welch t-test.

mod auc;
mod knn;
mod stats;

pub use auc::{auc, ScoredSet};
pub use knn::{knn_score, DEFAULT_K};
pub use stats::{
    ln_gamma, mean, regularized_incomplete_beta, replicate_ci, sample_variance, significance_code,
    t_two_sided_p, welch_t_test, ReplicateStats, WelchTest, Z_95,
};
