//! Dense feed-forward classifier with a temperature-scaled softmax head.
//!
//! Hidden layers use a rectifier; the last layer is affine and produces the
//! logits `z`. The output distribution is `softmax(z / tau)`. With no hidden
//! layers the model is a purely linear classifier.
//!
//! Weights are row-major with shape `(out_dim, in_dim)`.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Dense {
    fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite init bound");
        let weights = (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect();
        let biases = (0..out_dim).map(|_| dist.sample(rng)).collect();
        Self {
            in_dim,
            out_dim,
            weights,
            biases,
        }
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
        }));
    }
}

/// Parameter-shaped buffer for gradients (or velocities).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpClassifier) -> Self {
        Self {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: model.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        self.weights.iter_mut().flatten().for_each(|g| *g = 0.0);
        self.biases.iter_mut().flatten().for_each(|g| *g = 0.0);
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().flatten().for_each(|g| *g *= factor);
        self.biases.iter_mut().flatten().for_each(|g| *g *= factor);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    /// Flattened in the same order as [`MlpClassifier::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .fold(0.0_f64, |m, g| m.max(g.abs()))
    }

    /// Name of the first block holding a non-finite entry.
    pub fn first_non_finite(&self) -> Option<String> {
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if w.iter().any(|v| !v.is_finite()) {
                return Some(format!("layer {l} weights"));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Some(format!("layer {l} biases"));
            }
        }
        None
    }
}

/// Intermediate values of one forward pass, consumed by
/// [`MlpClassifier::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `inputs[l]` is the input fed to layer `l` (post-rectifier for l > 0).
    inputs: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    layers: Vec<Dense>,
    temperature: f64,
}

impl MlpClassifier {
    /// `layer_dims` is `[input, hidden..., classes]`.
    pub fn new<R: Rng + ?Sized>(layer_dims: &[usize], temperature: f64, rng: &mut R) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::Config(
                "an MLP needs at least input and output dimensions".into(),
            ));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!("zero-sized layer in {layer_dims:?}")));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        let layers = layer_dims
            .windows(2)
            .map(|w| Dense::new(w[0], w[1], rng))
            .collect();
        Ok(Self {
            layers,
            temperature,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_parameters() {
            return Err(Error::shape(format!(
                "expected {} parameters, got {}",
                self.num_parameters(),
                params.len()
            )));
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(&mut l.biases).for_each(|p| {
                *p = it.next().expect("length checked");
            });
        }
        Ok(())
    }

    /// Deep copy of all parameters.
    pub fn copy_parameters(&self) -> MlpClassifier {
        self.clone()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.probs)
    }

    pub fn trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(format!(
                "feature vector has dimension {}, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        inputs.push(x.to_vec());
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply(&inputs[l], &mut out);
            if l < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
                inputs.push(std::mem::take(&mut out));
            }
        }
        let logits = out;
        let probs = softmax_with_temperature(&logits, self.temperature);
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NumericFault {
                block: "forward probabilities".into(),
            });
        }
        Ok(ForwardTrace {
            inputs,
            logits,
            probs,
        })
    }

    /// Gradients of a loss whose gradient with respect to the output
    /// probabilities is `upstream`. Returns the parameter gradients and the
    /// gradient with respect to the input features.
    pub fn backward(&self, trace: &ForwardTrace, upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let mut grads = Gradients::zeros_like(self);
        let input_grad = self.backward_accumulate(trace, upstream, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Like [`backward`](Self::backward) but adds into an existing buffer.
    pub fn backward_accumulate(
        &self,
        trace: &ForwardTrace,
        upstream: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<f64>> {
        let m = self.num_classes();
        if upstream.len() != m || trace.probs.len() != m {
            return Err(Error::shape(format!(
                "upstream gradient has dimension {}, model has {m} classes",
                upstream.len()
            )));
        }
        if grads.weights.len() != self.layers.len() {
            return Err(Error::shape("gradient buffer does not match model".to_string()));
        }

        // d/dz of softmax(z / tau) contracted with the upstream gradient.
        let p = &trace.probs;
        let mean: f64 = p.iter().zip(upstream).map(|(p, g)| p * g).sum();
        let mut delta: Vec<f64> = p
            .iter()
            .zip(upstream)
            .map(|(p, g)| p * (g - mean) / self.temperature)
            .collect();

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.inputs[l];
            let gw = &mut grads.weights[l];
            let gb = &mut grads.biases[l];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                row.iter_mut().zip(input).for_each(|(g, x)| *g += d * x);
            }
            let mut prev = vec![0.0; layer.in_dim];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
            }
            if l > 0 {
                // rectifier: zero where the activation was clipped
                prev.iter_mut()
                    .zip(input)
                    .for_each(|(p, a)| if *a <= 0.0 { *p = 0.0 });
            }
            delta = prev;
        }
        Ok(delta)
    }

    pub(crate) fn apply_update(&mut self, mut f: impl FnMut(usize, bool, &mut [f64])) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            f(l, false, &mut layer.weights);
            f(l, true, &mut layer.biases);
        }
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let probs = self.forward(x)?;
        Ok(argmax(&probs))
    }
}

/// Numerically stable `softmax(logits / tau)`.
pub fn softmax_with_temperature(logits: &[f64], tau: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| ((z - max) / tau).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    fn model(dims: &[usize], tau: f64, seed: u64) -> MlpClassifier {
        MlpClassifier::new(dims, tau, &mut rng::stream(seed, &[0])).unwrap()
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax_with_temperature(&[0.0, 0.0], 7.0), vec![0.5, 0.5]);
        let p = softmax_with_temperature(&[1.0, 0.0], 20.0);
        assert_relative_eq!(p[0], 0.51250, epsilon = 1e-4);
        assert_relative_eq!(p[1], 0.48750, epsilon = 1e-4);
        let p = softmax_with_temperature(&[1.0, 1.0, 0.0, -1.0], 1e6);
        let spread = p.iter().cloned().fold(f64::MIN, f64::max) - p.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-3);
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let p = softmax_with_temperature(&[1e308, 0.0, -1e308], 1.0);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let m = model(&[3, 2], 1.0, 1);
        assert!(matches!(m.forward(&[1.0, 2.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn rejects_bad_config() {
        let mut r = rng::stream(0, &[]);
        assert!(MlpClassifier::new(&[3], 1.0, &mut r).is_err());
        assert!(MlpClassifier::new(&[3, 0, 2], 1.0, &mut r).is_err());
        assert!(MlpClassifier::new(&[3, 2], 0.0, &mut r).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let m = model(&[4, 6, 3], 2.0, 3);
        let t = m.trace(&[0.3, -1.0, 0.5, 2.0]).unwrap();
        let (g, gx) = m.backward(&t, &[0.0; 3]).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert!(gx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_layer_cross_entropy_gradient_is_closed_form() {
        let m = model(&[3, 4], 1.0, 5);
        let x = [0.5, -1.5, 2.0];
        let y = 2;
        let t = m.trace(&x).unwrap();
        // dL/dp for L = -log p_y
        let mut up = vec![0.0; 4];
        up[y] = -1.0 / t.probs[y];
        let (g, _) = m.backward(&t, &up).unwrap();
        for o in 0..4 {
            let err = t.probs[o] - if o == y { 1.0 } else { 0.0 };
            assert_relative_eq!(g.biases[0][o], err, epsilon = 1e-12);
            for i in 0..3 {
                assert_relative_eq!(g.weights[0][o * 3 + i], err * x[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn backward_is_deterministic() {
        let m = model(&[5, 7, 4], 3.0, 9);
        let t = m.trace(&[0.1, 0.2, -0.3, 0.4, 0.5]).unwrap();
        let up = [0.3, -0.1, 0.7, -2.0];
        let a = m.backward(&t, &up).unwrap();
        let b = m.backward(&t, &up).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn copy_is_independent() {
        let src = model(&[3, 5, 2], 1.0, 11);
        let copy = src.copy_parameters();
        let x = [0.2, 0.4, -0.6];
        assert_eq!(
            src.forward(&x).unwrap().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            copy.forward(&x).unwrap().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let mut perturbed = src.clone();
        let mut p = perturbed.parameters();
        p.iter_mut().for_each(|v| *v += 1.0);
        perturbed.set_parameters(&p).unwrap();
        assert_eq!(copy.parameters(), src.parameters());
        assert_ne!(perturbed.parameters(), copy.parameters());
        assert_eq!(copy.copy_parameters(), src);
    }

    #[test]
    fn parameters_roundtrip() {
        let mut m = model(&[2, 3, 2], 1.0, 13);
        let p: Vec<f64> = (0..m.num_parameters()).map(|i| i as f64).collect();
        m.set_parameters(&p).unwrap();
        assert_eq!(m.parameters(), p);
        assert!(m.set_parameters(&p[1..]).is_err());
    }

    #[test]
    fn argmax_ties_break_low() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }
}
