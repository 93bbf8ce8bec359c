use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ramp `gamma(t) = min(t / T * lambda, lambda)` weighting the RC,
/// similarity and distillation terms, and the refinement schedule
/// `mu(t) = min(rho * max(t - t0, 0), mu_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub lambda: f64,
    /// `T`: epochs until `gamma` reaches `lambda`.
    pub ramp_epochs: usize,
    pub rho: f64,
    /// `t0`: first epoch at which refinement may be non-zero.
    pub refine_start: usize,
    pub mu_max: f64,
    pub warmup_epochs: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            ramp_epochs: 100,
            rho: 0.02,
            refine_start: 70,
            mu_max: 0.9,
            warmup_epochs: 20,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if self.ramp_epochs == 0 {
            return Err(Error::Config("T must be at least one epoch".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be > 0, got {}", self.rho)));
        }
        if !(0.0..=1.0).contains(&self.mu_max) {
            return Err(Error::Config(format!("mu_max must be in [0, 1], got {}", self.mu_max)));
        }
        if self.refine_start < self.warmup_epochs {
            return Err(Error::Config(format!(
                "t0 ({}) must not precede the end of warm-up ({})",
                self.refine_start, self.warmup_epochs
            )));
        }
        Ok(())
    }

    pub fn gamma(&self, epoch: usize) -> f64 {
        (epoch as f64 / self.ramp_epochs as f64 * self.lambda).min(self.lambda)
    }

    pub fn mu(&self, epoch: usize) -> f64 {
        (self.rho * epoch.saturating_sub(self.refine_start) as f64).min(self.mu_max)
    }
}
