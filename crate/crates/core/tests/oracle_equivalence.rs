mod common;

use asyco::cotrain::{NoiseCounts, SimilarityBatch};
use asyco::data::{balanced_labels, inject_uniform_noise};
use asyco::losses::{self, LossWeights};
use asyco::oracle;
use asyco::rng;
use common::*;
use rand::seq::SliceRandom;
use rand::Rng;

const TOL: f64 = 1e-12;
const CASES: usize = 1000;

#[test]
fn single_instance_losses_match_reference() {
    let mut r = rng_for(1);
    for _ in 0..CASES {
        let x = random_instance(&mut r);
        let y = &x.candidates;
        let pairs = [
            ("cc", losses::cc_loss(&x.views, y).unwrap().value),
            ("rc", losses::rc_loss(&x.views, &x.confidence, y).unwrap().value),
            ("sim", losses::sim_loss(&x.views, &x.partner, x.similar).unwrap().value),
            ("ssl", losses::ssl_loss(&x.views[0], &x.views[1..], y).unwrap().value),
            ("distill", losses::distill_loss(&x.target, &x.views[0]).unwrap().value),
        ];
        for (name, prod) in pairs {
            let reference = oracle::oracle_loss(name, &x).unwrap();
            assert!((prod - reference).abs() <= TOL, "{name}: {prod} vs {reference}");
        }
    }
}

#[test]
fn aggregated_confidence_matches_reference() {
    let mut r = rng_for(2);
    for _ in 0..CASES {
        let m = r.random_range(2..=10);
        let y = mask(&mut r, m);
        let views: Vec<Vec<f64>> = (0..r.random_range(1..=4)).map(|_| simplex(&mut r, m)).collect();
        let per_view: Vec<Vec<f64>> = views.iter().map(|p| losses::view_confidence(p, &y)).collect();
        let prod = losses::aggregate_confidence(&per_view, &y).unwrap();
        let reference = oracle::confidence(&views, &y);
        for (a, b) in prod.iter().zip(&reference) {
            assert!((a - b).abs() <= TOL);
        }
    }
}

#[test]
fn batch_objectives_match_reference() {
    let mut r = rng_for(3);
    for case in 0..CASES {
        let batch = random_batch(&mut r, case % 4 == 3);
        let weights = LossWeights {
            rc: r.random_range(0.0..=1.0),
            aux: r.random_range(0.0..=1.0),
            distill: r.random_range(0.0..=1.0),
        };
        let prod = production_total(&batch, weights);
        let reference = oracle::total(&batch, weights.rc, weights.aux, weights.distill);
        assert!((prod - reference).abs() <= TOL, "case {case}: {prod} vs {reference}");
    }
}

#[test]
fn per_instance_aux_matches_reference() {
    let mut r = rng_for(4);
    for _ in 0..CASES {
        let batch = random_batch(&mut r, false);
        let b = batch.aux.len();
        let i = r.random_range(0..b);
        let gamma = r.random_range(0.0..=1.0);
        let sim = SimilarityBatch::from_pseudo_labels(&batch.pseudo);
        let originals: Vec<Vec<f64>> = batch.aux.iter().map(|v| v[0].clone()).collect();
        let prod = losses::aux_loss(i, &batch.aux[i], &originals, &sim, &batch.candidates[i], gamma)
            .unwrap()
            .value;
        let y = &batch.candidates[i];
        let mut reference = oracle::ssl(&batch.aux[i][0], &batch.aux[i][1..], y);
        if b > 1 {
            let mut s = 0.0;
            for j in (0..b).filter(|&j| j != i) {
                s += oracle::sim(&batch.aux[i], &batch.aux[j][0], batch.pseudo[i] == batch.pseudo[j]);
            }
            reference += gamma * s / (b - 1) as f64;
        }
        assert!((prod - reference).abs() <= TOL);
    }
}

#[test]
fn minibatch_noise_estimate_converges_to_exact_rate() {
    let n = 2000;
    let truth = balanced_labels(n, 9, 5);
    let pseudo = inject_uniform_noise(&truth, 9, 0.3, 6).unwrap();
    let (exact_class, exact_sim) = oracle::sim_noise_oracle(&truth, &pseudo);

    let mut counts = NoiseCounts::default();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..50u64 {
        order.shuffle(&mut rng::stream(9, &[epoch]));
        for batch in order.chunks(64) {
            let p: Vec<usize> = batch.iter().map(|&i| pseudo[i]).collect();
            let t: Vec<usize> = batch.iter().map(|&i| truth[i]).collect();
            counts.observe(&p, &SimilarityBatch::from_pseudo_labels(&p), &t);
        }
    }
    assert!((counts.class_rate().unwrap() - exact_class).abs() < 1e-12);
    assert!((counts.sim_rate().unwrap() - exact_sim).abs() < 0.01);
}

#[test]
fn nine_class_similarity_noise_is_below_class_noise() {
    let n = 10_000;
    let truth = balanced_labels(n, 9, 11);
    let pseudo = inject_uniform_noise(&truth, 9, 0.3, 12).unwrap();
    let (class_rate, sim_rate) = oracle::sim_noise_oracle(&truth[..5000], &pseudo[..5000]);
    assert!(sim_rate < class_rate, "{sim_rate} !< {class_rate}");

    let mut counts = NoiseCounts::default();
    for (p, t) in pseudo.chunks(64).zip(truth.chunks(64)) {
        counts.observe(p, &SimilarityBatch::from_pseudo_labels(p), t);
    }
    assert!(counts.sim_rate().unwrap() < counts.class_rate().unwrap());
}
