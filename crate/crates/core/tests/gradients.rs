mod common;

use asyco::losses::{self, AuxTarget, BatchInputs, LossWeights, SimilarityBatch};
use asyco::oracle::{finite_diff_check, finite_diff_total, FiniteDiffBatch, FiniteDiffProblem};
use common::*;
use rand::Rng;

const H: f64 = 1e-5;

fn problem(r: &mut rand_chacha::ChaCha8Rng, d: usize, m: usize, views: usize) -> FiniteDiffProblem {
    let y = mask(r, m);
    FiniteDiffProblem {
        views: (0..views).map(|_| normal_vec(r, d, 1.0)).collect(),
        confidence: confidence_on(r, &y),
        candidates: y,
        partner: normal_vec(r, d, 1.0),
        similar: r.random_bool(0.5),
        target: simplex(r, m),
    }
}

#[test]
fn linear_model_cc_gradient() {
    let mut r = rng_for(10);
    let net = small_model(&mut r, &[6, 4], 1.0);
    let p = problem(&mut r, 6, 4, 3);
    let rep = finite_diff_check("cc", &net, &p, H).unwrap();
    assert!(rep.max_rel_error <= 1e-4, "{}", rep.max_rel_error);
    assert_eq!(rep.analytic.len(), net.num_parameters());
}

#[test]
fn every_loss_on_hidden_models() {
    let mut r = rng_for(11);
    for name in ["cc", "rc", "sim", "ssl", "distill"] {
        for _ in 0..5 {
            let net = small_model(&mut r, &[5, 7, 6], 2.0);
            let p = problem(&mut r, 5, 6, 3);
            let rep = finite_diff_check(name, &net, &p, H).unwrap();
            assert!(rep.max_rel_error <= 1e-4, "{name}: {}", rep.max_rel_error);
        }
    }
}

#[test]
fn class_label_auxiliary_composite() {
    let mut r = rng_for(12);
    let (d, m) = (4, 5);
    let dn = small_model(&mut r, &[d, 6, m], 1.0);
    let an = small_model(&mut r, &[d, 6, m], 1.0);
    let mut batch = FiniteDiffBatch {
        class_label_aux: true,
        ..Default::default()
    };
    for _ in 0..3 {
        let y = mask(&mut r, m);
        batch.disamb_views.push((0..2).map(|_| normal_vec(&mut r, d, 1.0)).collect());
        batch.aux_views.push((0..2).map(|_| normal_vec(&mut r, d, 1.0)).collect());
        batch.confidence.push(confidence_on(&mut r, &y));
        batch.pseudo.push((0..m).find(|&k| y[k]).unwrap());
        batch.candidates.push(y);
    }
    let rep = finite_diff_total(&dn, &an, &batch, LossWeights::uniform(0.6), H).unwrap();
    assert!(rep.max_rel_error <= 1e-4, "{}", rep.max_rel_error);
}

#[test]
fn step_size_and_names_are_validated() {
    let mut r = rng_for(13);
    let net = small_model(&mut r, &[3, 3], 1.0);
    let p = problem(&mut r, 3, 3, 1);
    assert!(finite_diff_check("cc", &net, &p, 1e-2).is_err());
    assert!(finite_diff_check("proden", &net, &p, H).is_err());
}

#[test]
fn stop_gradient_contracts() {
    let mut r = rng_for(14);
    let m = 4;
    let b = 3;
    let disamb: Vec<Vec<Vec<f64>>> = (0..b).map(|_| (0..3).map(|_| simplex(&mut r, m)).collect()).collect();
    let aux: Vec<Vec<Vec<f64>>> = (0..b).map(|_| (0..3).map(|_| simplex(&mut r, m)).collect()).collect();
    let y: Vec<Vec<bool>> = (0..b).map(|_| mask(&mut r, m)).collect();
    let cands: Vec<&[bool]> = y.iter().map(Vec::as_slice).collect();
    let w: Vec<Vec<f64>> = y.iter().map(|c| confidence_on(&mut r, c)).collect();
    let sim = SimilarityBatch::from_pseudo_labels(&[0, 1, 0]);
    let inputs = BatchInputs {
        disamb_views: &disamb,
        aux_views: &aux,
        candidates: &cands,
        rc_confidence: &w,
        aux_target: AuxTarget::Similarity(&sim),
    };
    // without pair supervision, nothing reaches the auxiliary original views
    let out = losses::total_loss(&inputs, LossWeights { rc: 1.0, aux: 0.0, distill: 1.0 }).unwrap();
    for g in &out.aux_grads {
        assert!(g[0].iter().all(|&v| v == 0.0));
    }

    // distillation alone never reaches the auxiliary network
    let single_d: Vec<Vec<Vec<f64>>> = disamb.iter().map(|v| vec![v[0].clone()]).collect();
    let single_a: Vec<Vec<Vec<f64>>> = aux.iter().map(|v| vec![v[0].clone()]).collect();
    let inputs = BatchInputs {
        disamb_views: &single_d,
        aux_views: &single_a,
        ..inputs
    };
    let out = losses::total_loss(&inputs, LossWeights { rc: 0.0, aux: 0.0, distill: 1.0 }).unwrap();
    assert!(out.aux_grads.iter().flatten().flatten().all(|&v| v == 0.0));
    assert!(out.disamb_grads.iter().flatten().flatten().any(|&v| v != 0.0));

    // the confidence is an input, not a function of the probabilities
    let p = vec![vec![0.2, 0.3, 0.4, 0.1]];
    let yy = [true, true, false, true];
    let base = losses::rc_loss(&p, &[0.5, 0.25, 0.0, 0.25], &yy).unwrap();
    assert_eq!(base.grads.len(), 1);
    assert_eq!(base.grads[0][2], 0.0);
}
