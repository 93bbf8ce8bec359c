//! Batch-level co-training objective
//! `L_disam + L_aux + gamma * L_distill`, averaged over batch members.

use serde::{Deserialize, Serialize};

use super::auxiliary::{aux_loss, ssl_loss, SimilarityBatch};
use super::distill::distill_loss;
use super::pll::{cc_loss, disambiguation_loss};
use crate::error::{Error, Result};

/// What the auxiliary network is supervised with besides consistency.
#[derive(Debug, Clone, Copy)]
pub enum AuxTarget<'a> {
    Similarity(&'a SimilarityBatch),
    /// Cross-entropy on pseudo class labels instead of pairs.
    PseudoLabels(&'a [usize]),
}

/// Multipliers of the RC, auxiliary supervision and distillation terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub rc: f64,
    pub aux: f64,
    pub distill: f64,
}

impl LossWeights {
    pub fn uniform(gamma: f64) -> Self {
        Self {
            rc: gamma,
            aux: gamma,
            distill: gamma,
        }
    }
}

/// Per-batch inputs. View 0 of every instance is the original.
#[derive(Debug, Clone, Copy)]
pub struct BatchInputs<'a> {
    pub disamb_views: &'a [Vec<Vec<f64>>],
    pub aux_views: &'a [Vec<Vec<f64>>],
    pub candidates: &'a [&'a [bool]],
    /// `w` before refinement starts, `w_hat` after.
    pub rc_confidence: &'a [Vec<f64>],
    pub aux_target: AuxTarget<'a>,
}

/// Unweighted batch means of every component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub cc: f64,
    pub rc: f64,
    pub sim: f64,
    pub ssl: f64,
    pub distill: f64,
}

impl LossParts {
    pub fn add_scaled(&mut self, other: &LossParts, scale: f64) {
        self.cc += scale * other.cc;
        self.rc += scale * other.rc;
        self.sim += scale * other.sim;
        self.ssl += scale * other.ssl;
        self.distill += scale * other.distill;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalLoss {
    pub value: f64,
    pub parts: LossParts,
    /// `[instance][view][class]` probability-space gradients.
    pub disamb_grads: Vec<Vec<Vec<f64>>>,
    pub aux_grads: Vec<Vec<Vec<f64>>>,
}

fn add_into(dst: &mut [f64], src: &[f64], scale: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

pub fn total_loss(inputs: &BatchInputs<'_>, weights: LossWeights) -> Result<TotalLoss> {
    let b = inputs.disamb_views.len();
    if b == 0 {
        return Err(Error::shape("empty batch"));
    }
    if inputs.aux_views.len() != b || inputs.candidates.len() != b || inputs.rc_confidence.len() != b {
        return Err(Error::shape("batch inputs disagree on the number of instances"));
    }
    if let AuxTarget::PseudoLabels(labels) = inputs.aux_target {
        if labels.len() != b {
            return Err(Error::shape("pseudo labels do not cover the batch"));
        }
    }
    let inv_b = 1.0 / b as f64;
    let aux_original: Vec<Vec<f64>> = inputs.aux_views.iter().map(|v| v[0].clone()).collect();
    let mut parts = LossParts::default();
    let mut value = 0.0;
    let mut disamb_grads: Vec<Vec<Vec<f64>>> = inputs
        .disamb_views
        .iter()
        .map(|views| views.iter().map(|v| vec![0.0; v.len()]).collect())
        .collect();
    let mut aux_grads: Vec<Vec<Vec<f64>>> = inputs
        .aux_views
        .iter()
        .map(|views| views.iter().map(|v| vec![0.0; v.len()]).collect())
        .collect();

    for i in 0..b {
        let y = inputs.candidates[i];
        let disam = disambiguation_loss(&inputs.disamb_views[i], &inputs.rc_confidence[i], y, weights.rc)?;
        for (g, dg) in disamb_grads[i].iter_mut().zip(&disam.total.grads) {
            add_into(g, dg, inv_b);
        }

        let (aux_value, ssl, sup) = match inputs.aux_target {
            AuxTarget::Similarity(sim) => {
                let out = aux_loss(i, &inputs.aux_views[i], &aux_original, sim, y, weights.aux)?;
                for (g, vg) in aux_grads[i].iter_mut().zip(&out.view_grads) {
                    add_into(g, vg, inv_b);
                }
                for (j, pg) in &out.partner_grads {
                    add_into(&mut aux_grads[*j][0], pg, inv_b);
                }
                (out.value, out.ssl, out.sim)
            }
            AuxTarget::PseudoLabels(labels) => {
                let views = &inputs.aux_views[i];
                let ssl = ssl_loss(&views[0], &views[1..], y)?;
                let mut single = vec![false; y.len()];
                single[labels[i]] = true;
                let ce = cc_loss(views, &single)?;
                for (g, sg) in aux_grads[i][1..].iter_mut().zip(&ssl.grads) {
                    add_into(g, sg, inv_b);
                }
                for (g, cg) in aux_grads[i].iter_mut().zip(&ce.grads) {
                    add_into(g, cg, inv_b * weights.aux);
                }
                (ssl.value + weights.aux * ce.value, ssl.value, ce.value)
            }
        };

        let kl = distill_loss(&inputs.aux_views[i][0], &inputs.disamb_views[i][0])?;
        add_into(&mut disamb_grads[i][0], &kl.grads[0], inv_b * weights.distill);

        value += inv_b * (disam.total.value + aux_value + weights.distill * kl.value);
        parts.add_scaled(
            &LossParts {
                cc: disam.cc,
                rc: disam.rc,
                sim: sup,
                ssl,
                distill: kl.value,
            },
            inv_b,
        );
    }
    Ok(TotalLoss {
        value,
        parts,
        disamb_grads,
        aux_grads,
    })
}
