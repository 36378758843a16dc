//! Small dense numerical core: matrices, MLPs with hand-written backward
//! passes, Adam, a plateau scheduler and softmax regression.

pub mod adam;
pub mod logistic;
pub mod matrix;
pub mod mlp;
pub mod scheduler;

pub use adam::AdamState;
pub use logistic::{train_logistic, LinearClassifier, LogisticConfig};
pub use matrix::Matrix;
pub use mlp::{mlp_backward, mlp_forward, mlp_infer, Activation, DenseLayer, MlpActivations, MlpGrads, MlpParams};
pub use scheduler::{PlateauScheduler, PlateauSettings};

/// A collection of named flat tensors visited in declaration order.
///
/// Parameters and their gradients implement this with identical ordering so
/// optimizers and checkpoints can walk them in lockstep.
pub trait Parameters {
    fn named_tensors(&self) -> Vec<(String, &[f64])>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;
}
