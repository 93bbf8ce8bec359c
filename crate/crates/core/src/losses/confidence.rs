//! Label-confidence vectors: per-view normalisation over the candidate
//! set, geometric aggregation across views, and convex refinement.
//!
//! Every confidence vector is zero off the candidate set and sums to one on
//! it. When the candidate mass vanishes numerically the vector falls back to
//! uniform over the candidates.

use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-12;

fn uniform_over(candidates: &[bool]) -> Vec<f64> {
    let size = candidates.iter().filter(|&&b| b).count().max(1) as f64;
    candidates
        .iter()
        .map(|&b| if b { 1.0 / size } else { 0.0 })
        .collect()
}

pub fn uniform_confidence(candidates: &[bool]) -> Vec<f64> {
    uniform_over(candidates)
}

/// `c_k = p_k / sum_{j in Y} p_j` on the candidates, zero elsewhere.
pub fn view_confidence(probs: &[f64], candidates: &[bool]) -> Vec<f64> {
    let mass: f64 = probs
        .iter()
        .zip(candidates)
        .filter(|(_, &b)| b)
        .map(|(p, _)| p)
        .sum();
    if !(mass > f64::MIN_POSITIVE) {
        log::warn!("candidate probability mass vanished; using uniform confidence");
        return uniform_over(candidates);
    }
    probs
        .iter()
        .zip(candidates)
        .map(|(&p, &b)| if b { p / mass } else { 0.0 })
        .collect()
}

/// Normalised geometric mean of the per-view confidences.
pub fn aggregate_confidence(view_confidences: &[Vec<f64>], candidates: &[bool]) -> Result<Vec<f64>> {
    if view_confidences.is_empty() {
        return Err(Error::shape("confidence aggregation needs at least one view"));
    }
    let m = candidates.len();
    if view_confidences.iter().any(|c| c.len() != m) {
        return Err(Error::shape("view confidence and candidate mask lengths differ"));
    }
    let inv_views = 1.0 / view_confidences.len() as f64;
    let geo: Vec<f64> = (0..m)
        .map(|k| {
            if !candidates[k] {
                return 0.0;
            }
            let log_sum: f64 = view_confidences.iter().map(|c| c[k].ln()).sum();
            (log_sum * inv_views).exp()
        })
        .collect();
    let total: f64 = geo.iter().sum();
    if !(total > f64::MIN_POSITIVE) {
        log::warn!("all candidate geometric means vanished; using uniform confidence");
        return Ok(uniform_over(candidates));
    }
    Ok(geo.into_iter().map(|g| g / total).collect())
}

/// `w_hat = (1 - mu) w + mu w_tilde`, renormalised over the candidates if
/// rounding pushed the sum away from one.
pub fn refine_confidence(w: &[f64], w_aux: &[f64], mu: f64, candidates: &[bool]) -> Vec<f64> {
    let mut refined: Vec<f64> = w
        .iter()
        .zip(w_aux)
        .zip(candidates)
        .map(|((&a, &b), &c)| if c { (1.0 - mu) * a + mu * b } else { 0.0 })
        .collect();
    let total: f64 = refined.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        if total > f64::MIN_POSITIVE {
            refined.iter_mut().for_each(|v| *v /= total);
        } else {
            refined = uniform_over(candidates);
        }
    }
    refined
}

/// Checks the support and normalisation invariants within `tol`.
pub fn is_valid_confidence(w: &[f64], candidates: &[bool], tol: f64) -> bool {
    w.len() == candidates.len()
        && w.iter()
            .zip(candidates)
            .all(|(&v, &c)| (0.0..=1.0).contains(&v) && (c || v == 0.0))
        && (w.iter().sum::<f64>() - 1.0).abs() <= tol
}

/// Per-instance confidences of both networks.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceState {
    /// Disambiguation network, `w_i`.
    pub disamb: Vec<Vec<f64>>,
    /// Auxiliary network, `w~_i`.
    pub aux: Vec<Vec<f64>>,
    /// Blend used by the RC term, `w_hat_i`; equals `disamb` until
    /// refinement starts.
    pub refined: Vec<Vec<f64>>,
}

impl ConfidenceState {
    /// Uniform over each candidate set.
    pub fn uniform(candidates: &[Vec<bool>]) -> Self {
        let w: Vec<Vec<f64>> = candidates.iter().map(|c| uniform_over(c)).collect();
        Self {
            aux: w.clone(),
            refined: w.clone(),
            disamb: w,
        }
    }

    pub fn is_valid(&self, candidates: &[Vec<bool>]) -> bool {
        self.disamb
            .iter()
            .chain(&self.aux)
            .chain(&self.refined)
            .zip(candidates.iter().chain(candidates).chain(candidates))
            .all(|(w, c)| is_valid_confidence(w, c, 1e-6))
    }
}
