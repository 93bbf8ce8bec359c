//! Co-training objectives, label confidences and their schedules.
//!
//! Every loss returns its value together with gradients with respect to the
//! probability vectors it consumes; `MlpClassifier::backward` maps those to
//! parameters.

mod auxiliary;
mod confidence;
mod distill;
mod pll;
mod schedule;
mod total;

pub use auxiliary::{aux_loss, sim_loss, ssl_loss, AuxLoss, SimLoss, SimilarityBatch};
pub use confidence::{
    aggregate_confidence, is_valid_confidence, refine_confidence, uniform_confidence, view_confidence,
    ConfidenceState,
};
pub use distill::distill_loss;
pub use pll::{cc_loss, disambiguation_loss, rc_loss, DisambiguationLoss};
pub use schedule::ScheduleConfig;
pub use total::{total_loss, AuxTarget, BatchInputs, LossParts, LossWeights, TotalLoss};

use crate::error::{Error, Result};

/// Floor for logarithm arguments and bound for inner products.
pub const EPS: f64 = 1e-12;

/// A loss value and one gradient vector per input view.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    pub grads: Vec<Vec<f64>>,
}

impl LossOutput {
    pub(crate) fn add_scaled(&mut self, other: &LossOutput, scale: f64) {
        self.value += scale * other.value;
        for (g, o) in self.grads.iter_mut().zip(&other.grads) {
            for (a, b) in g.iter_mut().zip(o) {
                *a += scale * b;
            }
        }
    }
}

fn clamped_log(x: f64) -> f64 {
    x.max(EPS).ln()
}

fn clamped_log_grad(x: f64) -> f64 {
    if x > EPS {
        1.0 / x
    } else {
        0.0
    }
}

fn check_views(views: &[Vec<f64>], m: usize) -> Result<()> {
    if views.is_empty() {
        return Err(Error::shape("at least one view is required"));
    }
    if let Some(v) = views.iter().find(|v| v.len() != m) {
        return Err(Error::shape(format!("view has {} classes, expected {m}", v.len())));
    }
    Ok(())
}
