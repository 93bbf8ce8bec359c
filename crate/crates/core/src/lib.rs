//! Partial-label learning with an asymmetric auxiliary task.
//!
//! A disambiguation network learns from candidate label sets while an
//! auxiliary network learns from pairwise similarity labels derived from the
//! disambiguation network's confidences. The auxiliary network then corrects
//! the disambiguation network through distillation and confidence
//! refinement.

pub mod cotrain;
pub mod data;
pub mod error;
pub mod linalg_nn;
pub mod losses;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
