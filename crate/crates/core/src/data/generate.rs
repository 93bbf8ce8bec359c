//! Candidate-set generation.
//!
//! Uniform: every incorrect label joins `Y_i` independently with
//! probability `q`. Instance-dependent: incorrect label `j` joins with
//! probability `g'_j(x_i) / max_{k != y_i} g'_k(x_i)` where `g'` is a scorer
//! pretrained on ground truth. Every instance draws from its own stream
//! keyed on `(seed, instance)` so generation is order independent.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::{singleton, PartialDataset};
use crate::error::{Error, Result};
use crate::linalg_nn::{Gradients, MlpClassifier, SgdConfig, SgdState};
use crate::rng::{self, tag};

pub fn generate_uniform(labels: &[usize], num_classes: usize, q: f64, seed: u64) -> Result<Vec<Vec<bool>>> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Config(format!("flip probability q must be in [0, 1], got {q}")));
    }
    labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if y >= num_classes {
                return Err(Error::Validation(format!("label {y} out of range")));
            }
            let mut rng = rng::stream(seed, &[tag::CANDIDATES, i as u64]);
            let mut mask = singleton(y, num_classes);
            for (k, slot) in mask.iter_mut().enumerate() {
                let draw: f64 = rng.random();
                if k != y && draw < q {
                    *slot = true;
                }
            }
            Ok(mask)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub sgd: SgdConfig,
    pub seed: u64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64],
            epochs: 10,
            batch_size: 64,
            sgd: SgdConfig::default(),
            seed: 0,
        }
    }
}

/// Classifier trained on ground truth, used only to shape
/// instance-dependent candidate sets.
#[derive(Debug, Clone)]
pub struct PretrainedScorer {
    model: MlpClassifier,
    epochs: usize,
    /// Mean cross-entropy per training epoch.
    pub training_log: Vec<f64>,
}

impl PretrainedScorer {
    pub fn from_model(model: MlpClassifier) -> Self {
        Self {
            model,
            epochs: 0,
            training_log: Vec::new(),
        }
    }

    pub fn train(ds: &PartialDataset, cfg: &ScorerConfig) -> Result<Self> {
        let labels = ds
            .true_labels()
            .ok_or_else(|| Error::Validation("scorer pretraining needs true labels".into()))?;
        let mut dims = vec![ds.dim()];
        dims.extend(&cfg.hidden);
        dims.push(ds.num_classes());
        let mut model = MlpClassifier::new(&dims, 1.0, &mut rng::stream(cfg.seed, &[tag::SCORER_INIT]))?;
        let mut opt = SgdState::new(cfg.sgd.clone(), &model)?;
        let mut order: Vec<usize> = (0..ds.len()).collect();
        let mut grads = Gradients::zeros_like(&model);
        let mut log = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut rng::stream(cfg.seed, &[tag::SCORER_SHUFFLE, epoch as u64]));
            let mut total = 0.0;
            for batch in order.chunks(cfg.batch_size.max(1)) {
                grads.fill_zero();
                for &i in batch {
                    let trace = model.trace(ds.feature(i))?;
                    let y = labels[i];
                    let p = trace.probs[y].max(f64::MIN_POSITIVE);
                    total -= p.ln();
                    let mut up = vec![0.0; ds.num_classes()];
                    up[y] = -1.0 / p;
                    model.backward_accumulate(&trace, &up, &mut grads)?;
                }
                grads.scale(1.0 / batch.len() as f64);
                opt.step(&mut model, &grads, epoch)?;
            }
            log.push(total / ds.len().max(1) as f64);
        }
        Ok(Self {
            model,
            epochs: cfg.epochs,
            training_log: log,
        })
    }

    pub fn model(&self) -> &MlpClassifier {
        &self.model
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.model.forward(x)
    }

    /// SHA-256 over the little-endian parameter bytes.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for p in self.model.parameters() {
            h.update(p.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Per-label flip probabilities `g'_j / max_{k != y} g'_k` for incorrect
/// labels (the true label gets 1). Returns `None` when the incorrect-label
/// mass is zero.
pub fn flip_probabilities(scores: &[f64], label: usize) -> Option<Vec<f64>> {
    let denom = scores
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != label)
        .map(|(_, &s)| s)
        .fold(0.0_f64, f64::max);
    if denom <= 0.0 {
        return None;
    }
    Some(
        scores
            .iter()
            .enumerate()
            .map(|(k, &s)| if k == label { 1.0 } else { (s / denom).min(1.0) })
            .collect(),
    )
}

pub fn generate_instance_dependent(
    ds: &PartialDataset,
    scorer: &PretrainedScorer,
    seed: u64,
) -> Result<Vec<Vec<bool>>> {
    let labels = ds
        .true_labels()
        .ok_or_else(|| Error::Validation("candidate generation needs true labels".into()))?;
    if scorer.model().input_dim() != ds.dim() || scorer.model().num_classes() != ds.num_classes() {
        return Err(Error::shape("scorer was trained on a different feature or label space"));
    }
    let mut degenerate = 0usize;
    let masks = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let scores = scorer.probabilities(ds.feature(i))?;
            let probs = flip_probabilities(&scores, y).unwrap_or_else(|| {
                degenerate += 1;
                singleton(y, ds.num_classes()).iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
            });
            let mut rng = rng::stream(seed, &[tag::CANDIDATES, i as u64]);
            Ok(probs
                .iter()
                .enumerate()
                .map(|(k, &p)| {
                    let draw: f64 = rng.random();
                    k == y || draw < p
                })
                .collect())
        })
        .collect::<Result<Vec<Vec<bool>>>>()?;
    if degenerate > 0 {
        log::warn!(
            "scorer assigned zero mass to every incorrect label for {degenerate} instance(s); \
             no false positives generated for them"
        );
    }
    Ok(masks)
}

/// Provenance record written next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateManifest {
    pub process: GenerationProcess,
    pub seed: u64,
    pub num_instances: usize,
    pub num_classes: usize,
    pub mean_candidate_size: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scorer_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scorer_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scorer_training_log: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationProcess {
    Uniform,
    InstanceDependent,
}

impl std::str::FromStr for GenerationProcess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "instance-dependent" | "instance" => Ok(Self::InstanceDependent),
            other => Err(Error::Config(format!(
                "unknown generation process `{other}` (expected uniform or instance-dependent)"
            ))),
        }
    }
}
