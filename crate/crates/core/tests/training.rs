use asyco::cotrain::{evaluate, run_training, write_metrics_to, Mode, TrainConfig, Trainer};
use asyco::data::{gaussian_blobs, generate_uniform, BlobConfig, PartialDataset, Split};
use asyco::linalg_nn::MlpClassifier;
use asyco::rng;

fn small_data(seed: u64) -> PartialDataset {
    let blobs = gaussian_blobs(&BlobConfig {
        num_instances: 120,
        dim: 5,
        num_classes: 4,
        center_scale: 1.5,
        cluster_std: 1.0,
        seed,
    })
    .unwrap();
    let cands = generate_uniform(blobs.true_labels().unwrap(), 4, 0.4, seed).unwrap();
    blobs.with_candidates(cands).unwrap()
}

fn quick(mode: Mode) -> TrainConfig {
    let mut cfg = TrainConfig {
        mode,
        epochs: 8,
        batch_size: 16,
        hidden: vec![6],
        ..Default::default()
    };
    cfg.set_warmup(3);
    cfg
}

fn same_predictions(a: &MlpClassifier, b: &MlpClassifier, ds: &PartialDataset) -> bool {
    (0..ds.len()).all(|i| a.forward(ds.feature(i)).unwrap() == b.forward(ds.feature(i)).unwrap())
}

#[test]
fn auxiliary_starts_as_an_independent_copy() {
    let ds = small_data(1);
    let mut tr = Trainer::new(ds.clone(), None, quick(Mode::Asyco)).unwrap();
    tr.warmup().unwrap();
    assert!(tr.auxiliary().is_none());
    tr.init_auxiliary().unwrap();
    let aux = tr.auxiliary().unwrap();
    assert!(same_predictions(tr.disambiguation(), aux, &ds));
    assert_eq!(tr.confidence().aux, tr.confidence().disamb);

    tr.step_epoch().unwrap();
    assert!(!same_predictions(tr.disambiguation(), tr.auxiliary().unwrap(), &ds));
}

#[test]
fn zero_warmup_copies_the_untrained_network() {
    let ds = small_data(2);
    let mut cfg = quick(Mode::Asyco);
    cfg.set_warmup(0);
    let mut tr = Trainer::new(ds.clone(), None, cfg).unwrap();
    let fresh = tr.disambiguation().copy_parameters();
    assert!(tr.warmup().unwrap().is_empty());
    tr.init_auxiliary().unwrap();
    assert_eq!(tr.auxiliary().unwrap().parameters(), fresh.parameters());
}

#[test]
fn symmetric_peers_with_identical_init_stay_identical() {
    let ds = small_data(3);
    let mut tr = Trainer::new(ds.clone(), None, quick(Mode::Syco)).unwrap();
    tr.replace_auxiliary(tr.disambiguation().copy_parameters()).unwrap();
    for m in tr.run().unwrap() {
        assert_eq!(m.loss_distill, 0.0);
    }
    assert_eq!(tr.disambiguation().parameters(), tr.auxiliary().unwrap().parameters());
}

#[test]
fn symmetric_peers_with_distinct_init_disagree() {
    let ds = small_data(4);
    let mut tr = Trainer::new(ds, None, quick(Mode::Syco)).unwrap();
    let metrics = tr.run().unwrap();
    assert!(metrics.iter().all(|m| m.loss_distill > 0.0));
}

#[test]
fn identical_runs_write_identical_metrics() {
    let ds = small_data(5);
    for mode in Mode::ALL {
        let cfg = quick(mode);
        let a = run_training(&ds, &cfg).unwrap();
        let b = run_training(&ds, &cfg).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        write_metrics_to(&a.metrics, &mut ca).unwrap();
        write_metrics_to(&b.metrics, &mut cb).unwrap();
        assert_eq!(ca, cb, "{mode}");
    }
}

#[test]
fn supervised_mode_trains_on_true_labels() {
    let ds = small_data(6);
    let mut tr = Trainer::new(ds.clone(), None, quick(Mode::Supervised)).unwrap();
    assert!(tr.train_set().candidate_sets().iter().all(|y| y.iter().filter(|&&c| c).count() == 1));
    for m in tr.run().unwrap() {
        // a singleton candidate set makes both disambiguation losses plain cross-entropy
        assert!((m.loss_cc - m.loss_rc).abs() < 1e-12);
        assert_eq!(m.class_noise, Some(0.0));
    }
}

#[test]
fn refinement_waits_for_its_start_epoch() {
    let ds = small_data(7);
    let mut cfg = quick(Mode::Asyco);
    cfg.epochs = 7;
    cfg.schedule.refine_start = 5;
    let mut tr = Trainer::new(ds, None, cfg).unwrap();
    // mu is still zero at the start epoch itself
    for t in 0..7 {
        let m = tr.step_epoch().unwrap();
        let c = tr.confidence();
        if t <= 5 {
            assert_eq!(c.refined, c.disamb, "epoch {t}");
            assert_eq!(m.mu, 0.0);
        } else {
            assert_ne!(c.refined, c.disamb);
            assert!(m.mu > 0.0);
        }
        assert!(c.is_valid(tr.train_set().candidate_sets()));
    }
}

#[test]
fn losses_stay_finite_and_accuracy_is_reported() {
    let ds = small_data(8);
    let res = run_training(&ds, &quick(Mode::Asyco)).unwrap();
    assert_eq!(res.metrics.len(), 8);
    for m in &res.metrics {
        assert!(m.acc.is_some());
        assert!([m.loss_cc, m.loss_rc, m.loss_sim, m.loss_ssl, m.loss_distill].iter().all(|v| v.is_finite()));
    }
    assert!(res.metrics[..3].iter().all(|m| m.loss_sim == 0.0));
    assert!(res.metrics[3..].iter().all(|m| m.loss_sim > 0.0));
}

#[test]
fn empty_splits_are_rejected() {
    let ds = small_data(9);
    let empty = ds.subset(&[], Split::Test);
    let net = MlpClassifier::new(&[5, 4], 1.0, &mut rng::stream(1, &[0])).unwrap();
    assert!(evaluate(&net, &empty).is_err());
    assert!(Trainer::new(empty, None, quick(Mode::Asyco)).is_err());
}
