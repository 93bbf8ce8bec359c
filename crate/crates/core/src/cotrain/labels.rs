//! Pseudo class labels, similarity labels and their noise rates.

use serde::{Deserialize, Serialize};

pub use crate::losses::SimilarityBatch;

/// `k'_i = argmax_{k in Y_i} w_ik`, lowest index on ties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoLabels {
    pub labels: Vec<usize>,
    pub epoch: usize,
}

pub fn pseudo_label(confidence: &[f64], candidates: &[bool]) -> usize {
    let mut best: Option<usize> = None;
    for (k, (&w, &c)) in confidence.iter().zip(candidates).enumerate() {
        if c && best.is_none_or(|b| w > confidence[b]) {
            best = Some(k);
        }
    }
    best.expect("candidate sets are non-empty")
}

pub fn pseudo_labels<C: AsRef<[bool]>>(confidences: &[Vec<f64>], candidates: &[C], epoch: usize) -> PseudoLabels {
    PseudoLabels {
        labels: confidences
            .iter()
            .zip(candidates)
            .map(|(w, c)| pseudo_label(w, c.as_ref()))
            .collect(),
        epoch,
    }
}

/// Similarity labels over all pairs of the given batch members.
pub fn similarity_labels(pseudo: &PseudoLabels, batch: &[usize]) -> SimilarityBatch {
    let local: Vec<usize> = batch.iter().map(|&i| pseudo.labels[i]).collect();
    SimilarityBatch::from_pseudo_labels(&local)
}

/// Mismatch counts against ground truth, accumulated over batches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NoiseCounts {
    pub class_errors: usize,
    pub instances: usize,
    pub pair_errors: usize,
    pub pairs: usize,
}

impl NoiseCounts {
    /// `pseudo` and `truth` are indexed like the similarity batch.
    pub fn observe(&mut self, pseudo: &[usize], similarity: &SimilarityBatch, truth: &[usize]) {
        self.instances += pseudo.len();
        self.class_errors += pseudo.iter().zip(truth).filter(|(a, b)| a != b).count();
        self.pairs += similarity.len();
        self.pair_errors += similarity
            .pairs()
            .iter()
            .filter(|&&(i, j, s)| s != (truth[i] == truth[j]))
            .count();
    }

    pub fn merge(&mut self, other: &NoiseCounts) {
        self.class_errors += other.class_errors;
        self.instances += other.instances;
        self.pair_errors += other.pair_errors;
        self.pairs += other.pairs;
    }

    pub fn class_rate(&self) -> Option<f64> {
        (self.instances > 0).then(|| self.class_errors as f64 / self.instances as f64)
    }

    pub fn sim_rate(&self) -> Option<f64> {
        (self.pairs > 0).then(|| self.pair_errors as f64 / self.pairs as f64)
    }
}

/// `(class noise rate, similarity noise rate)` of one batch; a rate is 0
/// when there is nothing to count.
pub fn noise_rates(pseudo: &[usize], similarity: &SimilarityBatch, truth: &[usize]) -> (f64, f64) {
    let mut c = NoiseCounts::default();
    c.observe(pseudo, similarity, truth);
    (c.class_rate().unwrap_or(0.0), c.sim_rate().unwrap_or(0.0))
}
