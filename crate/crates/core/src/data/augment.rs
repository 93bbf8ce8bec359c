//! Feature-space augmentation: additive Gaussian noise scaled by each
//! column's standard deviation, followed by random coordinate masking.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_AUGMENTATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Noise standard deviation as a fraction of the column std.
    pub noise_sigma: f64,
    /// Probability that a coordinate is zeroed.
    pub mask_fraction: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            noise_sigma: 0.1,
            mask_fraction: 0.1,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!("augmentation sigma must be >= 0, got {}", self.noise_sigma)));
        }
        if !(0.0..=1.0).contains(&self.mask_fraction) {
            return Err(Error::Config(format!(
                "mask fraction must be in [0, 1], got {}",
                self.mask_fraction
            )));
        }
        Ok(())
    }
}

/// `A(x)`: the original vector first, then the augmented views.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedViews {
    views: Vec<Vec<f64>>,
}

impl AugmentedViews {
    pub fn original(&self) -> &[f64] {
        &self.views[0]
    }

    pub fn augmented(&self) -> &[Vec<f64>] {
        &self.views[1..]
    }

    pub fn all(&self) -> &[Vec<f64>] {
        &self.views
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_inner(self) -> Vec<Vec<f64>> {
        self.views
    }
}

#[derive(Debug, Clone)]
pub struct Augmenter {
    config: AugmentConfig,
    column_std: Vec<f64>,
}

impl Augmenter {
    pub fn new(config: AugmentConfig, column_std: Vec<f64>) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, column_std })
    }

    pub fn config(&self) -> &AugmentConfig {
        &self.config
    }

    pub fn augment<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        let AugmentConfig {
            noise_sigma,
            mask_fraction,
        } = self.config;
        x.iter()
            .zip(&self.column_std)
            .map(|(&v, &s)| {
                let z: f64 = StandardNormal.sample(rng);
                let masked = rng.random::<f64>() < mask_fraction;
                if masked {
                    0.0
                } else {
                    v + noise_sigma * s * z
                }
            })
            .collect()
    }

    pub fn make_views<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        num_augmentations: usize,
        rng: &mut R,
    ) -> Result<AugmentedViews> {
        if num_augmentations > MAX_AUGMENTATIONS {
            return Err(Error::Config(format!(
                "at most {MAX_AUGMENTATIONS} augmentations per instance, got {num_augmentations}"
            )));
        }
        if x.len() != self.column_std.len() {
            return Err(Error::shape(format!(
                "feature vector has dimension {}, augmenter expects {}",
                x.len(),
                self.column_std.len()
            )));
        }
        let mut views = Vec::with_capacity(1 + num_augmentations);
        views.push(x.to_vec());
        for _ in 0..num_augmentations {
            views.push(self.augment(x, rng));
        }
        Ok(AugmentedViews { views })
    }
}
