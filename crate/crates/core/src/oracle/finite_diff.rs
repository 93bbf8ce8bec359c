//! Central-difference checks of analytic parameter gradients. The loss is
//! evaluated with the reference implementations; the analytic side is the
//! production loss gradient pushed through `MlpClassifier::backward`.

use serde::{Deserialize, Serialize};

use super::reference::{self, OracleBatch, OracleInputs};
use crate::error::{Error, Result};
use crate::linalg_nn::{Gradients, MlpClassifier};
use crate::losses::{self, AuxTarget, BatchInputs, LossWeights, SimilarityBatch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDiffReport {
    pub loss: String,
    pub step: f64,
    /// `|a - n| / max(|a|, |n|, 1e-8)` for every parameter.
    pub rel_errors: Vec<f64>,
    pub max_rel_error: f64,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn report(loss: &str, step: f64, analytic: Vec<f64>, numeric: Vec<f64>) -> FiniteDiffReport {
    let rel_errors: Vec<f64> = analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .collect();
    let max_rel_error = rel_errors.iter().copied().fold(0.0, f64::max);
    FiniteDiffReport {
        loss: loss.to_string(),
        step,
        rel_errors,
        max_rel_error,
        analytic,
        numeric,
    }
}

fn central_differences(params: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    let mut p = params.to_vec();
    let mut out = Vec::with_capacity(p.len());
    for k in 0..p.len() {
        let orig = p[k];
        p[k] = orig + h;
        let up = f(&p)?;
        p[k] = orig - h;
        let down = f(&p)?;
        p[k] = orig;
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

fn check_step(h: f64) -> Result<()> {
    if (1e-6..=1e-4).contains(&h) {
        Ok(())
    } else {
        Err(Error::Config(format!("finite-difference step must be in [1e-6, 1e-4], got {h}")))
    }
}

/// Raw features and side inputs of a single-instance loss.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FiniteDiffProblem {
    /// Feature vectors of the instance's views, original first.
    pub views: Vec<Vec<f64>>,
    pub candidates: Vec<bool>,
    pub confidence: Vec<f64>,
    /// Partner features for the similarity loss, run through the same model.
    pub partner: Vec<f64>,
    pub similar: bool,
    /// Constant distillation target.
    pub target: Vec<f64>,
}

fn probs(model: &MlpClassifier, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    xs.iter().map(|x| model.forward(x)).collect()
}

/// Gradient check of one named loss (`cc`, `rc`, `sim`, `ssl`, `distill`)
/// with respect to every parameter of `model`. Stop-gradient inputs (the
/// consistency target and the distillation target) are held at their
/// unperturbed values.
pub fn finite_diff_check(name: &str, model: &MlpClassifier, problem: &FiniteDiffProblem, h: f64) -> Result<FiniteDiffReport> {
    check_step(h)?;
    if !reference::ORACLE_LOSSES.contains(&name) {
        return Err(Error::UnknownLoss(name.to_string()));
    }
    let traces: Vec<_> = problem.views.iter().map(|x| model.trace(x)).collect::<Result<_>>()?;
    let view_probs: Vec<Vec<f64>> = traces.iter().map(|t| t.probs.clone()).collect();
    let frozen_original = view_probs[0].clone();
    let y = &problem.candidates;

    let mut grads = Gradients::zeros_like(model);
    match name {
        "cc" | "rc" | "ssl" | "distill" => {
            let out = match name {
                "cc" => losses::cc_loss(&view_probs, y)?,
                "rc" => losses::rc_loss(&view_probs, &problem.confidence, y)?,
                "ssl" => losses::ssl_loss(&frozen_original, &view_probs[1..], y)?,
                _ => losses::distill_loss(&problem.target, &view_probs[0])?,
            };
            let offset = usize::from(name == "ssl");
            for (g, t) in out.grads.iter().zip(&traces[offset..]) {
                model.backward_accumulate(t, g, &mut grads)?;
            }
        }
        _ => {
            let partner_trace = model.trace(&problem.partner)?;
            let out = losses::sim_loss(&view_probs, &partner_trace.probs, problem.similar)?;
            for (g, t) in out.view_grads.iter().zip(&traces) {
                model.backward_accumulate(t, g, &mut grads)?;
            }
            model.backward_accumulate(&partner_trace, &out.partner_grad, &mut grads)?;
        }
    }
    let analytic = grads.flatten();

    let mut probe = model.clone();
    let numeric = central_differences(&model.parameters(), h, |p| {
        probe.set_parameters(p)?;
        let mut views = probs(&probe, &problem.views)?;
        let mut inputs = OracleInputs {
            candidates: y.clone(),
            confidence: problem.confidence.clone(),
            similar: problem.similar,
            target: problem.target.clone(),
            ..Default::default()
        };
        match name {
            "ssl" => views[0] = frozen_original.clone(),
            "sim" => inputs.partner = probe.forward(&problem.partner)?,
            _ => {}
        }
        inputs.views = views;
        reference::oracle_loss(name, &inputs)
    })?;
    Ok(report(name, h, analytic, numeric))
}

/// Raw features of one batch of the co-training objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FiniteDiffBatch {
    /// `[i][view]` features for the disambiguation network.
    pub disamb_views: Vec<Vec<Vec<f64>>>,
    /// `[i][view]` features for the auxiliary network.
    pub aux_views: Vec<Vec<Vec<f64>>>,
    pub candidates: Vec<Vec<bool>>,
    pub confidence: Vec<Vec<f64>>,
    pub pseudo: Vec<usize>,
    pub class_label_aux: bool,
}

/// Gradient check of the full batch objective with respect to the
/// parameters of both networks, disambiguation first.
pub fn finite_diff_total(
    disamb: &MlpClassifier,
    aux: &MlpClassifier,
    batch: &FiniteDiffBatch,
    weights: LossWeights,
    h: f64,
) -> Result<FiniteDiffReport> {
    check_step(h)?;
    let trace_all = |m: &MlpClassifier, views: &[Vec<Vec<f64>>]| -> Result<Vec<Vec<_>>> {
        views.iter().map(|v| v.iter().map(|x| m.trace(x)).collect()).collect()
    };
    let d_traces = trace_all(disamb, &batch.disamb_views)?;
    let a_traces = trace_all(aux, &batch.aux_views)?;
    let to_probs = |tr: &Vec<Vec<crate::linalg_nn::ForwardTrace>>| -> Vec<Vec<Vec<f64>>> {
        tr.iter().map(|v| v.iter().map(|t| t.probs.clone()).collect()).collect()
    };
    let d_probs = to_probs(&d_traces);
    let a_probs = to_probs(&a_traces);
    let aux_targets: Vec<Vec<f64>> = a_probs.iter().map(|v| v[0].clone()).collect();

    let sim = SimilarityBatch::from_pseudo_labels(&batch.pseudo);
    let cands: Vec<&[bool]> = batch.candidates.iter().map(Vec::as_slice).collect();
    let inputs = BatchInputs {
        disamb_views: &d_probs,
        aux_views: &a_probs,
        candidates: &cands,
        rc_confidence: &batch.confidence,
        aux_target: if batch.class_label_aux {
            AuxTarget::PseudoLabels(&batch.pseudo)
        } else {
            AuxTarget::Similarity(&sim)
        },
    };
    let out = losses::total_loss(&inputs, weights)?;
    let mut gd = Gradients::zeros_like(disamb);
    for (tr, g) in d_traces.iter().zip(&out.disamb_grads) {
        for (t, gv) in tr.iter().zip(g) {
            disamb.backward_accumulate(t, gv, &mut gd)?;
        }
    }
    let mut ga = Gradients::zeros_like(aux);
    for (tr, g) in a_traces.iter().zip(&out.aux_grads) {
        for (t, gv) in tr.iter().zip(g) {
            aux.backward_accumulate(t, gv, &mut ga)?;
        }
    }
    let mut analytic = gd.flatten();
    analytic.extend(ga.flatten());

    let split = disamb.num_parameters();
    let mut params = disamb.parameters();
    params.extend(aux.parameters());
    let (mut d_probe, mut a_probe) = (disamb.clone(), aux.clone());
    let numeric = central_differences(&params, h, |p| {
        d_probe.set_parameters(&p[..split])?;
        a_probe.set_parameters(&p[split..])?;
        let all = |m: &MlpClassifier, views: &[Vec<Vec<f64>>]| -> Result<Vec<Vec<Vec<f64>>>> {
            views.iter().map(|v| probs(m, v)).collect()
        };
        let ob = OracleBatch {
            disamb: all(&d_probe, &batch.disamb_views)?,
            aux: all(&a_probe, &batch.aux_views)?,
            aux_targets: aux_targets.clone(),
            candidates: batch.candidates.clone(),
            confidence: batch.confidence.clone(),
            pseudo: batch.pseudo.clone(),
            class_label_aux: batch.class_label_aux,
        };
        Ok(reference::total(&ob, weights.rc, weights.aux, weights.distill))
    })?;
    Ok(report("total", h, analytic, numeric))
}
