//! Synthetic benchmark data and label-noise injection.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::PartialDataset;
use crate::error::{Error, Result};
use crate::linalg_nn::Matrix;
use crate::rng::{self, tag};

/// Balanced isotropic Gaussian blobs. Class centres are drawn from
/// `N(0, center_scale^2 I)` and points from `N(centre, cluster_std^2 I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobConfig {
    pub num_instances: usize,
    pub dim: usize,
    pub num_classes: usize,
    pub center_scale: f64,
    pub cluster_std: f64,
    pub seed: u64,
}

pub fn gaussian_blobs(cfg: &BlobConfig) -> Result<PartialDataset> {
    if cfg.num_classes == 0 || cfg.dim == 0 {
        return Err(Error::Config("blobs need at least one class and one dimension".into()));
    }
    let mut rng = rng::stream(cfg.seed, &[tag::SYNTHETIC]);
    let centers: Vec<Vec<f64>> = (0..cfg.num_classes)
        .map(|_| {
            (0..cfg.dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    cfg.center_scale * z
                })
                .collect()
        })
        .collect();
    let mut labels: Vec<usize> = (0..cfg.num_instances).map(|i| i % cfg.num_classes).collect();
    labels.shuffle(&mut rng);
    let mut data = Vec::with_capacity(cfg.num_instances * cfg.dim);
    for &y in &labels {
        for c in &centers[y] {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(c + cfg.cluster_std * z);
        }
    }
    let features = Matrix::from_vec(cfg.num_instances, cfg.dim, data)?;
    PartialDataset::supervised(features, labels, cfg.num_classes)
}

/// Balanced labels `i mod m`, shuffled.
pub fn balanced_labels(n: usize, num_classes: usize, seed: u64) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % num_classes).collect();
    labels.shuffle(&mut rng::stream(seed, &[tag::SYNTHETIC]));
    labels
}

/// Symmetric class noise: with probability `rate` a label is replaced by
/// one of the other `m - 1` classes chosen uniformly.
pub fn inject_uniform_noise(labels: &[usize], num_classes: usize, rate: f64, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Config(format!("noise rate must be in [0, 1], got {rate}")));
    }
    if num_classes < 2 && rate > 0.0 {
        return Err(Error::Config("label noise needs at least two classes".into()));
    }
    let mut rng = rng::stream(seed, &[tag::LABEL_NOISE]);
    Ok(labels
        .iter()
        .map(|&y| {
            if rng.random::<f64>() < rate {
                let k = rng.random_range(0..num_classes - 1);
                if k >= y {
                    k + 1
                } else {
                    k
                }
            } else {
                y
            }
        })
        .collect())
}
