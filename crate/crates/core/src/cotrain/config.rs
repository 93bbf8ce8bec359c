use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{AugmentConfig, MAX_AUGMENTATIONS};
use crate::error::{Error, Result};
use crate::linalg_nn::SgdConfig;
use crate::losses::ScheduleConfig;

/// Training variant. `Asyco` is the full method; the others switch off or
/// replace one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Asyco,
    /// Disambiguation network alone for every epoch.
    NoCotrain,
    /// Two disambiguation networks with mutual KL distillation.
    Syco,
    NoDistill,
    NoRefine,
    /// Auxiliary network trained on pseudo class labels instead of pairs.
    ClassLabelAux,
    /// Candidate sets replaced by true labels; cross-entropy only.
    Supervised,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Asyco,
        Mode::NoCotrain,
        Mode::Syco,
        Mode::NoDistill,
        Mode::NoRefine,
        Mode::ClassLabelAux,
        Mode::Supervised,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Asyco => "asyco",
            Mode::NoCotrain => "no-cotrain",
            Mode::Syco => "syco",
            Mode::NoDistill => "no-distill",
            Mode::NoRefine => "no-refine",
            Mode::ClassLabelAux => "class-label-aux",
            Mode::Supervised => "supervised",
        }
    }

    /// Whether an auxiliary network is trained on similarity pairs.
    pub fn uses_similarity(self) -> bool {
        matches!(self, Mode::Asyco | Mode::NoDistill | Mode::NoRefine)
    }

    /// Whether the asymmetric auxiliary network exists at all.
    pub fn has_auxiliary(self) -> bool {
        self.uses_similarity() || self == Mode::ClassLabelAux
    }

    pub fn distills(self) -> bool {
        matches!(self, Mode::Asyco | Mode::NoRefine | Mode::ClassLabelAux | Mode::Syco)
    }

    pub fn refines(self) -> bool {
        matches!(self, Mode::Asyco | Mode::NoDistill | Mode::ClassLabelAux)
    }

    /// Which component the variant isolates, for run summaries.
    pub fn ablation(self) -> Option<&'static str> {
        match self {
            Mode::Asyco | Mode::Supervised => None,
            Mode::NoCotrain => Some("co-training"),
            Mode::Syco => Some("asymmetry"),
            Mode::NoDistill => Some("distillation"),
            Mode::NoRefine => Some("confidence refinement"),
            Mode::ClassLabelAux => Some("similarity labels"),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Mode::ALL.iter().map(|m| m.as_str()).collect();
                Error::Config(format!("unknown mode `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

/// Width of the single rectified hidden layer in the default encoder.
pub const DEFAULT_HIDDEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub epochs: usize,
    pub batch_size: usize,
    /// Augmented views per instance in addition to the original.
    pub num_augmentations: usize,
    pub augment: AugmentConfig,
    /// Hidden layer widths; empty for a linear model.
    pub hidden: Vec<usize>,
    pub temperature: f64,
    pub schedule: ScheduleConfig,
    pub sgd: SgdConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Asyco,
            epochs: 200,
            batch_size: 64,
            num_augmentations: 2,
            augment: AugmentConfig::default(),
            hidden: vec![DEFAULT_HIDDEN],
            temperature: 20.0,
            schedule: ScheduleConfig::default(),
            sgd: SgdConfig::default(),
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn warmup_epochs(&self) -> usize {
        self.schedule.warmup_epochs
    }

    /// Sets the warm-up length and moves `t0` to keep its offset from it.
    pub fn set_warmup(&mut self, warmup: usize) {
        let offset = self.schedule.refine_start - self.schedule.warmup_epochs;
        self.schedule.warmup_epochs = warmup;
        self.schedule.refine_start = warmup + offset;
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.sgd.validate()?;
        self.augment.validate()?;
        if self.epochs == 0 {
            return Err(Error::Config("at least one epoch is required".into()));
        }
        if self.schedule.warmup_epochs >= self.epochs {
            return Err(Error::Config(format!(
                "warm-up ({}) must be shorter than training ({} epochs)",
                self.schedule.warmup_epochs, self.epochs
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.mode.uses_similarity() && self.batch_size < 2 {
            return Err(Error::Config(format!(
                "mode {} builds similarity pairs and needs a batch size of at least 2",
                self.mode
            )));
        }
        if self.num_augmentations > MAX_AUGMENTATIONS {
            return Err(Error::Config(format!(
                "at most {MAX_AUGMENTATIONS} augmentations are supported, got {}",
                self.num_augmentations
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layers must be non-empty".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature must be > 0, got {}", self.temperature)));
        }
        Ok(())
    }

    pub fn layer_dims(&self, input_dim: usize, num_classes: usize) -> Vec<usize> {
        std::iter::once(input_dim)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(num_classes))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_roundtrip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        assert!("cotrain".parse::<Mode>().is_err());
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = TrainConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.schedule.refine_start, cfg.warmup_epochs() + 50);
    }

    #[test]
    fn rejects_bad_combinations() {
        let mut cfg = TrainConfig {
            batch_size: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.mode = Mode::NoCotrain;
        cfg.validate().unwrap();

        let mut cfg = TrainConfig::default();
        cfg.set_warmup(200);
        assert!(cfg.validate().is_err());

        let cfg = TrainConfig {
            num_augmentations: 4,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn warmup_keeps_refinement_offset() {
        let mut cfg = TrainConfig::default();
        cfg.set_warmup(5);
        assert_eq!(cfg.schedule.refine_start, 55);
    }
}
