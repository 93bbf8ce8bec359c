#![allow(dead_code)]

use asyco::cotrain::SimilarityBatch;
use asyco::linalg_nn::MlpClassifier;
use asyco::losses::{self, AuxTarget, BatchInputs, LossWeights};
use asyco::oracle::{OracleBatch, OracleInputs};
use asyco::rng;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    rng::stream(seed, &[0xfeed])
}

/// Random probability vector with entries bounded away from zero.
pub fn simplex(r: &mut impl Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| r.random_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Non-empty random candidate mask.
pub fn mask(r: &mut impl Rng, m: usize) -> Vec<bool> {
    let mut y: Vec<bool> = (0..m).map(|_| r.random_bool(0.5)).collect();
    let k = r.random_range(0..m);
    y[k] = true;
    y
}

pub fn confidence_on(r: &mut impl Rng, y: &[bool]) -> Vec<f64> {
    let raw: Vec<f64> = y.iter().map(|&c| if c { r.random_range(0.01..1.0) } else { 0.0 }).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

pub fn normal_vec(r: &mut impl Rng, n: usize, sd: f64) -> Vec<f64> {
    let d = Normal::new(0.0, sd).unwrap();
    (0..n).map(|_| d.sample(r)).collect()
}

/// MLP with parameters drawn from `N(0, 0.1)`.
pub fn small_model(r: &mut ChaCha8Rng, dims: &[usize], tau: f64) -> MlpClassifier {
    let mut net = MlpClassifier::new(dims, tau, r).unwrap();
    let p = normal_vec(r, net.num_parameters(), 0.1);
    net.set_parameters(&p).unwrap();
    net
}

/// Random architecture with input and class counts at most 10.
pub fn random_dims(r: &mut impl Rng) -> Vec<usize> {
    let d = r.random_range(2..=10);
    let m = r.random_range(2..=10);
    if r.random_bool(0.5) {
        vec![d, m]
    } else {
        vec![d, r.random_range(3..=8), m]
    }
}

pub fn random_instance(r: &mut impl Rng) -> OracleInputs {
    let m = r.random_range(2..=10);
    let views = (0..r.random_range(1..=4)).map(|_| simplex(r, m)).collect();
    let candidates = mask(r, m);
    OracleInputs {
        confidence: confidence_on(r, &candidates),
        views,
        candidates,
        partner: simplex(r, m),
        similar: r.random_bool(0.5),
        target: simplex(r, m),
    }
}

pub fn random_batch(r: &mut impl Rng, class_label_aux: bool) -> OracleBatch {
    let m = r.random_range(2..=10);
    let b = r.random_range(1..=8);
    let views = r.random_range(1..=4);
    let mut batch = OracleBatch {
        class_label_aux,
        ..Default::default()
    };
    for _ in 0..b {
        let y = mask(r, m);
        batch.disamb.push((0..views).map(|_| simplex(r, m)).collect());
        let aux: Vec<Vec<f64>> = (0..views).map(|_| simplex(r, m)).collect();
        batch.aux_targets.push(aux[0].clone());
        batch.aux.push(aux);
        batch.confidence.push(confidence_on(r, &y));
        let members: Vec<usize> = (0..m).filter(|&k| y[k]).collect();
        batch.pseudo.push(*members.choose(r).unwrap());
        batch.candidates.push(y);
    }
    batch
}

pub fn production_total(batch: &OracleBatch, weights: LossWeights) -> f64 {
    let sim = SimilarityBatch::from_pseudo_labels(&batch.pseudo);
    let cands: Vec<&[bool]> = batch.candidates.iter().map(Vec::as_slice).collect();
    let inputs = BatchInputs {
        disamb_views: &batch.disamb,
        aux_views: &batch.aux,
        candidates: &cands,
        rc_confidence: &batch.confidence,
        aux_target: if batch.class_label_aux {
            AuxTarget::PseudoLabels(&batch.pseudo)
        } else {
            AuxTarget::Similarity(&sim)
        },
    };
    losses::total_loss(&inputs, weights).unwrap().value
}
