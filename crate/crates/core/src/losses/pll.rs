//! Classifier-consistent and risk-consistent partial-label losses over the
//! views of a single instance.

use super::{check_views, clamped_log, clamped_log_grad, LossOutput};
use crate::error::{Error, Result};

/// `-(1/|A|) sum_views log(sum_{k in Y} p*_k)`.
pub fn cc_loss(view_probs: &[Vec<f64>], candidates: &[bool]) -> Result<LossOutput> {
    check_views(view_probs, candidates.len())?;
    let scale = 1.0 / view_probs.len() as f64;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(view_probs.len());
    for p in view_probs {
        let mass: f64 = p.iter().zip(candidates).filter(|(_, &c)| c).map(|(v, _)| v).sum();
        let outside: f64 = p.iter().zip(candidates).filter(|(_, &c)| !c).map(|(v, _)| v).sum();
        // near full mass the complement keeps the digits that `ln(mass)` loses
        let log_mass = if outside < 0.5 { (-outside).ln_1p() } else { clamped_log(mass) };
        value -= scale * log_mass;
        let d = -scale * clamped_log_grad(mass);
        grads.push(candidates.iter().map(|&c| if c { d } else { 0.0 }).collect());
    }
    Ok(LossOutput { value, grads })
}

/// `-(1/|A|) sum_views sum_{k in Y} w_k log p*_k`, with `w` held constant.
pub fn rc_loss(view_probs: &[Vec<f64>], confidence: &[f64], candidates: &[bool]) -> Result<LossOutput> {
    check_views(view_probs, candidates.len())?;
    if confidence.len() != candidates.len() {
        return Err(Error::shape("confidence and candidate mask lengths differ"));
    }
    let scale = 1.0 / view_probs.len() as f64;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(view_probs.len());
    for p in view_probs {
        let mut g = vec![0.0; p.len()];
        for k in 0..p.len() {
            if candidates[k] {
                value -= scale * confidence[k] * clamped_log(p[k]);
                g[k] = -scale * confidence[k] * clamped_log_grad(p[k]);
            }
        }
        grads.push(g);
    }
    Ok(LossOutput { value, grads })
}

/// Parts of `L_cc + gamma * L_rc`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisambiguationLoss {
    pub cc: f64,
    pub rc: f64,
    pub total: LossOutput,
}

pub fn disambiguation_loss(
    view_probs: &[Vec<f64>],
    confidence: &[f64],
    candidates: &[bool],
    gamma: f64,
) -> Result<DisambiguationLoss> {
    let cc = cc_loss(view_probs, candidates)?;
    let rc = rc_loss(view_probs, confidence, candidates)?;
    let mut total = cc.clone();
    total.add_scaled(&rc, gamma);
    Ok(DisambiguationLoss {
        cc: cc.value,
        rc: rc.value,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cc_examples() {
        let out = cc_loss(&[vec![0.3, 0.5, 0.2]], &[true, true, false]).unwrap();
        assert_relative_eq!(out.value, -(0.8f64).ln(), epsilon = 1e-12);
        assert_relative_eq!(out.value, 0.22314, epsilon = 1e-5);

        let out = cc_loss(&[vec![0.2, 0.3, 0.5], vec![0.6, 0.1, 0.3]], &[true; 3]).unwrap();
        assert!(out.value.abs() < 1e-15);
    }

    #[test]
    fn rc_examples() {
        // uniform confidence, uniform prediction over m classes gives log m
        let m = 5;
        let p = vec![vec![1.0 / m as f64; m]];
        let y = [true, false, true, true, false];
        let w = [1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0 / 3.0, 0.0];
        let out = rc_loss(&p, &w, &y).unwrap();
        assert_relative_eq!(out.value, (m as f64).ln(), epsilon = 1e-12);

        let out = rc_loss(&[vec![0.25, 0.75]], &[0.0, 1.0], &[false, true]).unwrap();
        assert_relative_eq!(out.value, -(0.75f64).ln(), epsilon = 1e-15);
    }

    #[test]
    fn disambiguation_is_additive() {
        let p = vec![vec![0.1, 0.6, 0.3], vec![0.2, 0.5, 0.3]];
        let y = [true, true, false];
        let w = [0.4, 0.6, 0.0];
        let cc = cc_loss(&p, &y).unwrap();
        let rc = rc_loss(&p, &w, &y).unwrap();
        let at0 = disambiguation_loss(&p, &w, &y, 0.0).unwrap();
        assert_eq!(at0.total.value, cc.value);
        let full = disambiguation_loss(&p, &w, &y, 0.7).unwrap();
        assert_eq!(full.total.value, cc.value + 0.7 * rc.value);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        assert!(cc_loss(&[vec![0.5, 0.5]], &[true, false, true]).is_err());
        assert!(cc_loss(&[], &[true]).is_err());
        assert!(rc_loss(&[vec![0.5, 0.5]], &[1.0], &[true, false]).is_err());
    }
}
