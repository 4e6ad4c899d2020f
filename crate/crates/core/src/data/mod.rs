//! Synthetic multi-modal data, the contrastive augmentation family, and
//! group-level splitting.

mod augment;
mod csv;
mod generate;
mod split;
mod types;

pub use augment::{augment_pair, AugmentationConfig};
pub use csv::{format_feature, header, read_csv, read_csv_file, write_csv, write_csv_file};
pub use generate::{
    assign_labels, generate_synthetic, quantize, GeneratorConfig, Splits, MIN_CENTER_SEPARATION,
    SHELL_RADIUS,
};
pub use split::make_split_indices;
pub use types::{Dataset, GroundTruth, Label, Sample, Split, TrainingView};
