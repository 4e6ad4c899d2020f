//! Training objectives with analytic gradients with respect to embeddings.

mod info_nce;
mod mad;

pub use info_nce::{cosine_similarity, info_nce_loss, ContrastiveBatch, InfoNceOutput};
pub use mad::{mad_loss, MadBatch, MadOutput, DEFAULT_EPS_D};
