//! Dense kernels, the MLP classifier and its optimizer.

mod matrix;
mod mlp;
mod sgd;

pub use matrix::Matrix;
pub use mlp::{softmax_with_temperature, ForwardTrace, Gradients, MlpClassifier};
pub use sgd::{SgdConfig, SgdState};

#[cfg(test)]
pub(crate) use mlp::argmax;
