//! Losses of the auxiliary network: pairwise similarity BCE and the
//! augmentation consistency term.

use super::{check_views, clamped_log, clamped_log_grad, LossOutput, EPS};
use crate::error::{Error, Result};

/// All unordered within-batch pairs `(i, j, s_ij)` with `i < j`, indices
/// local to the batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityBatch {
    batch_size: usize,
    pairs: Vec<(usize, usize, bool)>,
}

impl SimilarityBatch {
    /// `s_ij = 1` iff the pseudo labels agree.
    pub fn from_pseudo_labels(pseudo: &[usize]) -> Self {
        let b = pseudo.len();
        let mut pairs = Vec::with_capacity(b * b.saturating_sub(1) / 2);
        for i in 0..b {
            for j in i + 1..b {
                pairs.push((i, j, pseudo[i] == pseudo[j]));
            }
        }
        Self { batch_size: b, pairs }
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn pairs(&self) -> &[(usize, usize, bool)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Partners of `i` with their labels, in ascending partner order.
    pub fn partners(&self, i: usize) -> Vec<(usize, bool)> {
        let mut out: Vec<(usize, bool)> = self
            .pairs
            .iter()
            .filter_map(|&(a, b, s)| {
                if a == i {
                    Some((b, s))
                } else if b == i {
                    Some((a, s))
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable_by_key(|&(j, _)| j);
        out
    }
}

/// BCE on `p_i*^T p_j` averaged over the views of `i`. Gradients reach both
/// the views of `i` and the partner's probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimLoss {
    pub value: f64,
    pub view_grads: Vec<Vec<f64>>,
    pub partner_grad: Vec<f64>,
}

pub fn sim_loss(views_i: &[Vec<f64>], probs_j: &[f64], similar: bool) -> Result<SimLoss> {
    check_views(views_i, probs_j.len())?;
    let scale = 1.0 / views_i.len() as f64;
    let mut value = 0.0;
    let mut view_grads = Vec::with_capacity(views_i.len());
    let mut partner_grad = vec![0.0; probs_j.len()];
    for p in views_i {
        let raw: f64 = p.iter().zip(probs_j).map(|(a, b)| a * b).sum();
        let ip = raw.clamp(EPS, 1.0 - EPS);
        let inside = raw > EPS && raw < 1.0 - EPS;
        let (term, d_ip) = if similar {
            (-ip.ln(), -1.0 / ip)
        } else {
            (-(1.0 - ip).ln(), 1.0 / (1.0 - ip))
        };
        value += scale * term;
        let d = if inside { scale * d_ip } else { 0.0 };
        view_grads.push(probs_j.iter().map(|&q| d * q).collect());
        for (g, &a) in partner_grad.iter_mut().zip(p) {
            *g += d * a;
        }
    }
    Ok(SimLoss {
        value,
        view_grads,
        partner_grad,
    })
}

/// `-(1/#aug) sum_aug sum_{k in Y} p_k log p*_k`, with the original-view
/// probabilities `p` held constant. Zero when there are no augmented views.
pub fn ssl_loss(original: &[f64], aug_views: &[Vec<f64>], candidates: &[bool]) -> Result<LossOutput> {
    if original.len() != candidates.len() {
        return Err(Error::shape("original probabilities and candidate mask lengths differ"));
    }
    if aug_views.is_empty() {
        return Ok(LossOutput {
            value: 0.0,
            grads: Vec::new(),
        });
    }
    check_views(aug_views, candidates.len())?;
    let scale = 1.0 / aug_views.len() as f64;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(aug_views.len());
    for p in aug_views {
        let mut g = vec![0.0; p.len()];
        for k in 0..p.len() {
            if candidates[k] {
                value -= scale * original[k] * clamped_log(p[k]);
                g[k] = -scale * original[k] * clamped_log_grad(p[k]);
            }
        }
        grads.push(g);
    }
    Ok(LossOutput { value, grads })
}

/// Auxiliary objective of one batch member `i`:
/// `L_ssl + gamma * mean_j L_sim(i, j)` over its batch partners.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxLoss {
    pub value: f64,
    pub ssl: f64,
    /// Unweighted mean similarity loss over partners.
    pub sim: f64,
    /// Gradients for every view of `i` (original first).
    pub view_grads: Vec<Vec<f64>>,
    /// Gradients for partners' original-view probabilities.
    pub partner_grads: Vec<(usize, Vec<f64>)>,
}

/// `batch_original[j]` holds the original-view probabilities of batch
/// member `j`; `instance_views` are all views of member `i`.
pub fn aux_loss(
    i: usize,
    instance_views: &[Vec<f64>],
    batch_original: &[Vec<f64>],
    similarity: &SimilarityBatch,
    candidates: &[bool],
    gamma: f64,
) -> Result<AuxLoss> {
    check_views(instance_views, candidates.len())?;
    if batch_original.len() != similarity.batch_size() || i >= batch_original.len() {
        return Err(Error::shape("similarity batch does not match the batch probabilities"));
    }
    let ssl = ssl_loss(&instance_views[0], &instance_views[1..], candidates)?;
    let mut view_grads: Vec<Vec<f64>> = vec![vec![0.0; candidates.len()]; instance_views.len()];
    for (g, sg) in view_grads[1..].iter_mut().zip(&ssl.grads) {
        g.copy_from_slice(sg);
    }
    let partners = similarity.partners(i);
    let mut sim = 0.0;
    let mut partner_grads = Vec::with_capacity(partners.len());
    if !partners.is_empty() {
        let inv = 1.0 / partners.len() as f64;
        for (j, s) in partners {
            let term = sim_loss(instance_views, &batch_original[j], s)?;
            sim += inv * term.value;
            for (g, tg) in view_grads.iter_mut().zip(&term.view_grads) {
                for (a, b) in g.iter_mut().zip(tg) {
                    *a += gamma * inv * b;
                }
            }
            partner_grads.push((j, term.partner_grad.iter().map(|v| gamma * inv * v).collect()));
        }
    }
    Ok(AuxLoss {
        value: ssl.value + gamma * sim,
        ssl: ssl.value,
        sim,
        view_grads,
        partner_grads,
    })
}
