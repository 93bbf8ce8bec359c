use super::{clamped_log, clamped_log_grad, LossOutput};
use crate::error::{Error, Result};

/// `KL(p_aux || p)`, gradient flowing only into `p`.
pub fn distill_loss(aux_probs: &[f64], disamb_probs: &[f64]) -> Result<LossOutput> {
    if aux_probs.len() != disamb_probs.len() {
        return Err(Error::shape("distillation target and prediction lengths differ"));
    }
    let mut value = 0.0;
    let mut grad = vec![0.0; disamb_probs.len()];
    for k in 0..aux_probs.len() {
        let q = aux_probs[k];
        if q > 0.0 {
            value += q * (clamped_log(q) - clamped_log(disamb_probs[k]));
            grad[k] = -q * clamped_log_grad(disamb_probs[k]);
        }
    }
    Ok(LossOutput {
        value,
        grads: vec![grad],
    })
}
