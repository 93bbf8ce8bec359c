//! Python bindings: loss functions, schedules, candidate generation and
//! end-to-end training on in-memory data.

use asyco::cotrain::{run_training, Mode, TrainConfig};
use asyco::data::PartialDataset;
use asyco::linalg_nn::Matrix;
use asyco::losses::{self, ScheduleConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyfunction]
fn cc_loss(views: Vec<Vec<f64>>, candidates: Vec<bool>) -> PyResult<f64> {
    Ok(losses::cc_loss(&views, &candidates).map_err(value_error)?.value)
}

#[pyfunction]
fn rc_loss(views: Vec<Vec<f64>>, confidence: Vec<f64>, candidates: Vec<bool>) -> PyResult<f64> {
    Ok(losses::rc_loss(&views, &confidence, &candidates)
        .map_err(value_error)?
        .value)
}

#[pyfunction]
#[pyo3(signature = (epoch, lam=1.0, ramp_epochs=100))]
fn gamma(epoch: usize, lam: f64, ramp_epochs: usize) -> f64 {
    ScheduleConfig {
        lambda: lam,
        ramp_epochs,
        ..Default::default()
    }
    .gamma(epoch)
}

#[pyfunction]
#[pyo3(signature = (epoch, rho=0.02, refine_start=70, mu_max=0.9))]
fn mu(epoch: usize, rho: f64, refine_start: usize, mu_max: f64) -> f64 {
    ScheduleConfig {
        rho,
        refine_start,
        mu_max,
        ..Default::default()
    }
    .mu(epoch)
}

#[pyfunction]
fn generate_uniform(labels: Vec<usize>, num_classes: usize, q: f64, seed: u64) -> PyResult<Vec<Vec<bool>>> {
    asyco::data::generate_uniform(&labels, num_classes, q, seed).map_err(value_error)
}

/// Overrides on top of the default configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: String,
    pub seed: u64,
    pub epochs: Option<usize>,
    pub warmup: Option<usize>,
    pub hidden: Option<Vec<usize>>,
    pub num_augs: Option<usize>,
    pub batch_size: Option<usize>,
}

pub fn build_config(o: &Overrides) -> asyco::Result<TrainConfig> {
    let mut cfg = TrainConfig {
        mode: o.mode.parse::<Mode>()?,
        seed: o.seed,
        ..Default::default()
    };
    if let Some(e) = o.epochs {
        cfg.epochs = e;
    }
    if let Some(w) = o.warmup {
        cfg.set_warmup(w);
    }
    if let Some(h) = &o.hidden {
        cfg.hidden = h.clone();
    }
    if let Some(k) = o.num_augs {
        cfg.num_augmentations = k;
    }
    if let Some(b) = o.batch_size {
        cfg.batch_size = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn build_dataset(
    features: &[Vec<f64>],
    candidates: Vec<Vec<bool>>,
    labels: Option<Vec<usize>>,
) -> asyco::Result<PartialDataset> {
    let m = candidates.first().map_or(0, Vec::len);
    PartialDataset::new(Matrix::from_rows(features)?, candidates, labels, m)
}

/// Trains with a stratified 80/20 split when `labels` are given. Returns a
/// dict with `final_acc`, `best_acc` and per-epoch `metrics`.
#[pyfunction]
#[pyo3(signature = (
    features, candidates, labels=None, mode="asyco", seed=1, epochs=None, warmup=None,
    hidden=None, num_augs=None, batch_size=None
))]
#[allow(clippy::too_many_arguments)]
fn train<'py>(
    py: Python<'py>,
    features: Vec<Vec<f64>>,
    candidates: Vec<Vec<bool>>,
    labels: Option<Vec<usize>>,
    mode: &str,
    seed: u64,
    epochs: Option<usize>,
    warmup: Option<usize>,
    hidden: Option<Vec<usize>>,
    num_augs: Option<usize>,
    batch_size: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = build_config(&Overrides {
        mode: mode.to_string(),
        seed,
        epochs,
        warmup,
        hidden,
        num_augs,
        batch_size,
    })
    .map_err(value_error)?;
    let ds = build_dataset(&features, candidates, labels).map_err(value_error)?;
    let result = py.detach(|| run_training(&ds, &cfg)).map_err(value_error)?;

    let out = PyDict::new(py);
    out.set_item("mode", cfg.mode.as_str())?;
    out.set_item("final_acc", result.summary.final_acc)?;
    out.set_item("best_acc", result.summary.best_acc)?;
    let mut rows = Vec::with_capacity(result.metrics.len());
    for m in &result.metrics {
        let d = PyDict::new(py);
        d.set_item("epoch", m.epoch)?;
        d.set_item("acc", m.acc)?;
        d.set_item("loss_cc", m.loss_cc)?;
        d.set_item("loss_rc", m.loss_rc)?;
        d.set_item("loss_sim", m.loss_sim)?;
        d.set_item("loss_ssl", m.loss_ssl)?;
        d.set_item("loss_distill", m.loss_distill)?;
        d.set_item("gamma", m.gamma)?;
        d.set_item("mu", m.mu)?;
        d.set_item("lr", m.lr)?;
        d.set_item("class_noise", m.class_noise)?;
        d.set_item("sim_noise", m.sim_noise)?;
        rows.push(d);
    }
    out.set_item("metrics", rows)?;
    Ok(out)
}

#[pymodule]
fn _asyco(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(cc_loss, m)?)?;
    m.add_function(wrap_pyfunction!(rc_loss, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(mu, m)?)?;
    m.add_function(wrap_pyfunction!(generate_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add("MODES", Mode::ALL.iter().map(|m| m.as_str()).collect::<Vec<_>>())?;
    Ok(())
}
