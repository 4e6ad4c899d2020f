//! Dense linear algebra, sequential MLPs with a reverse pass, and optimizers.

mod matrix;
mod mlp;
mod optim;

pub use matrix::{dot, norm, squared_distance, Matrix};
pub use mlp::{
    Activation, Backward, Dense, DenseGrad, GradientTape, LayerSpec, Mlp, MlpGradients,
};
pub use optim::{apply_lr_schedule, Optimizer, UpdateRule, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
