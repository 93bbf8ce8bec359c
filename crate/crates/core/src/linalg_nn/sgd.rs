use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, MlpClassifier};
use crate::error::{Error, Result};

/// SGD with heavy-ball momentum, coupled weight decay and step-down
/// milestones (lr divided by 10 at each).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub base_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub milestones: Vec<usize>,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            base_lr: 0.1,
            momentum: 0.9,
            weight_decay: 1e-4,
            milestones: vec![100, 150],
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be > 0, got {}", self.base_lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        let drops = self.milestones.iter().filter(|&&m| m <= epoch).count();
        self.base_lr / 10f64.powi(drops as i32)
    }
}

#[derive(Debug, Clone)]
pub struct SgdState {
    config: SgdConfig,
    velocity: Gradients,
}

impl SgdState {
    pub fn new(config: SgdConfig, model: &MlpClassifier) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            velocity: Gradients::zeros_like(model),
            config,
        })
    }

    pub fn config(&self) -> &SgdConfig {
        &self.config
    }

    pub fn velocity(&self) -> &Gradients {
        &self.velocity
    }

    /// `v <- momentum * v + g + wd * p; p <- p - lr(epoch) * v`.
    pub fn step(&mut self, model: &mut MlpClassifier, grads: &Gradients, epoch: usize) -> Result<()> {
        if let Some(block) = grads.first_non_finite() {
            return Err(Error::NumericFault { block });
        }
        if grads.weights.len() != self.velocity.weights.len()
            || grads
                .weights
                .iter()
                .zip(&self.velocity.weights)
                .any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::shape("gradient shapes do not match the optimizer state"));
        }
        let lr = self.config.lr_at(epoch);
        let SgdConfig {
            momentum,
            weight_decay,
            ..
        } = self.config;
        let velocity = &mut self.velocity;
        model.apply_update(|layer, is_bias, params| {
            let (v, g) = if is_bias {
                (&mut velocity.biases[layer], &grads.biases[layer])
            } else {
                (&mut velocity.weights[layer], &grads.weights[layer])
            };
            for ((p, v), g) in params.iter_mut().zip(v.iter_mut()).zip(g) {
                *v = momentum * *v + g + weight_decay * *p;
                *p -= lr * *v;
            }
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    fn setup(momentum: f64, weight_decay: f64) -> (MlpClassifier, SgdState, Gradients) {
        let model = MlpClassifier::new(&[3, 2], 1.0, &mut rng::stream(1, &[])).unwrap();
        let cfg = SgdConfig {
            base_lr: 0.1,
            momentum,
            weight_decay,
            milestones: vec![100, 150],
        };
        let state = SgdState::new(cfg, &model).unwrap();
        let mut g = Gradients::zeros_like(&model);
        for (i, v) in g.weights[0].iter_mut().chain(g.biases[0].iter_mut()).enumerate() {
            *v = 0.5 - 0.1 * i as f64;
        }
        (model, state, g)
    }

    #[test]
    fn plain_step_moves_by_lr_times_grad() {
        let (mut m, mut s, g) = setup(0.0, 0.0);
        let before = m.parameters();
        s.step(&mut m, &g, 0).unwrap();
        for ((a, b), g) in before.iter().zip(m.parameters()).zip(g.flatten()) {
            assert_relative_eq!(a - b, 0.1 * g, epsilon = 1e-15);
        }
    }

    #[test]
    fn milestones_divide_lr() {
        let cfg = SgdConfig::default();
        assert_eq!(cfg.lr_at(0), 0.1);
        assert_eq!(cfg.lr_at(99), 0.1);
        assert_relative_eq!(cfg.lr_at(100), 0.01, epsilon = 1e-18);
        assert_relative_eq!(cfg.lr_at(150), 0.001, epsilon = 1e-18);
    }

    #[test]
    fn momentum_compounds_second_update() {
        let (mut m, mut s, g) = setup(0.9, 0.0);
        let p0 = m.parameters();
        s.step(&mut m, &g, 0).unwrap();
        let p1 = m.parameters();
        s.step(&mut m, &g, 0).unwrap();
        let p2 = m.parameters();
        for i in 0..p0.len() {
            let first = p0[i] - p1[i];
            let second = p1[i] - p2[i];
            if first != 0.0 {
                assert_relative_eq!(second / first, 1.9, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn weight_decay_pulls_toward_zero() {
        let (mut m, mut s, mut g) = setup(0.0, 0.5);
        g.fill_zero();
        let before = m.parameters();
        s.step(&mut m, &g, 0).unwrap();
        for (a, b) in before.iter().zip(m.parameters()) {
            assert_relative_eq!(b, a * (1.0 - 0.1 * 0.5), epsilon = 1e-15);
        }
    }

    #[test]
    fn non_finite_gradient_names_block() {
        let (mut m, mut s, mut g) = setup(0.9, 0.0);
        g.biases[0][1] = f64::NAN;
        match s.step(&mut m, &g, 0) {
            Err(Error::NumericFault { block }) => assert_eq!(block, "layer 0 biases"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn velocity_mirrors_parameters() {
        let m = MlpClassifier::new(&[4, 5, 3], 1.0, &mut rng::stream(2, &[])).unwrap();
        let s = SgdState::new(SgdConfig::default(), &m).unwrap();
        assert_eq!(s.velocity().flatten().len(), m.num_parameters());
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = SgdConfig::default();
        cfg.momentum = 1.0;
        assert!(cfg.validate().is_err());
        cfg.momentum = 0.9;
        cfg.base_lr = 0.0;
        assert!(cfg.validate().is_err());
    }
}
