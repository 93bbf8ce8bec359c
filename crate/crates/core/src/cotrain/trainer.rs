//! Epoch-level orchestration of both networks.
//!
//! Per batch, every network is run on all views, confidences are refreshed
//! from those predictions, pseudo and similarity labels are rebuilt from the
//! disambiguation confidence, and then each network takes one SGD step.

use super::config::{Mode, TrainConfig};
use super::labels::{pseudo_label, NoiseCounts, PseudoLabels};
use super::metrics::EpochMetrics;
use crate::data::{Augmenter, PartialDataset};
use crate::error::{Error, Result};
use crate::linalg_nn::{ForwardTrace, Gradients, MlpClassifier, SgdState};
use crate::losses::{
    aggregate_confidence, disambiguation_loss, distill_loss, refine_confidence, total_loss, view_confidence,
    AuxTarget, BatchInputs, ConfidenceState, LossParts, LossWeights, SimilarityBatch,
};
use crate::rng::{self, tag};
use rand::seq::SliceRandom;

/// Fraction of correct arg-max predictions over all classes.
pub fn evaluate(model: &MlpClassifier, split: &PartialDataset) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::EmptySplit);
    }
    let labels = split
        .true_labels()
        .ok_or_else(|| Error::Validation("evaluation needs true labels".into()))?;
    let mut correct = 0usize;
    for (i, &y) in labels.iter().enumerate() {
        if model.predict(split.feature(i))? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / split.len() as f64)
}

#[derive(Default)]
struct EpochTotals {
    parts: LossParts,
    noise: NoiseCounts,
}

fn tag_fault(err: Error, network: &str) -> Error {
    match err {
        Error::NumericFault { block } => Error::NumericFault {
            block: format!("{network} network: {block}"),
        },
        other => other,
    }
}

fn forward_views(model: &MlpClassifier, views: &[Vec<f64>]) -> Result<Vec<ForwardTrace>> {
    views.iter().map(|v| model.trace(v)).collect()
}

fn probs_of(traces: &[ForwardTrace]) -> Vec<Vec<f64>> {
    traces.iter().map(|t| t.probs.clone()).collect()
}

fn confidence_from(probs: &[Vec<f64>], candidates: &[bool]) -> Result<Vec<f64>> {
    let per_view: Vec<Vec<f64>> = probs.iter().map(|p| view_confidence(p, candidates)).collect();
    aggregate_confidence(&per_view, candidates)
}

fn backprop(model: &MlpClassifier, traces: &[Vec<ForwardTrace>], grads: &[Vec<Vec<f64>>]) -> Result<Gradients> {
    let mut acc = Gradients::zeros_like(model);
    for (inst_traces, inst_grads) in traces.iter().zip(grads) {
        for (t, g) in inst_traces.iter().zip(inst_grads) {
            model.backward_accumulate(t, g, &mut acc)?;
        }
    }
    Ok(acc)
}

fn check_finite(value: f64, what: &str, epoch: usize) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericFault {
            block: format!("{what} at epoch {epoch}"),
        })
    }
}

pub struct Trainer {
    config: TrainConfig,
    train: PartialDataset,
    test: Option<PartialDataset>,
    augmenter: Augmenter,
    disamb: MlpClassifier,
    disamb_opt: SgdState,
    aux: Option<(MlpClassifier, SgdState)>,
    confidence: ConfidenceState,
    pseudo: Vec<usize>,
    epoch: usize,
}

impl Trainer {
    /// In supervised mode the candidate sets of `train` are replaced by the
    /// true labels.
    pub fn new(train: PartialDataset, test: Option<PartialDataset>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::EmptySplit);
        }
        if let Some(t) = &test {
            if t.dim() != train.dim() || t.num_classes() != train.num_classes() {
                return Err(Error::shape("train and test splits disagree on dimensions or classes"));
            }
        }
        let train = if config.mode == Mode::Supervised {
            train.to_supervised()?
        } else {
            train
        };
        let (_, column_std) = train.features().column_stats();
        let augmenter = Augmenter::new(config.augment, column_std)?;
        let dims = config.layer_dims(train.dim(), train.num_classes());
        let disamb = MlpClassifier::new(&dims, config.temperature, &mut rng::stream(config.seed, &[tag::DISAMB_INIT]))?;
        let disamb_opt = SgdState::new(config.sgd.clone(), &disamb)?;
        let aux = if config.mode == Mode::Syco {
            let peer = MlpClassifier::new(&dims, config.temperature, &mut rng::stream(config.seed, &[tag::AUX_INIT]))?;
            let opt = SgdState::new(config.sgd.clone(), &peer)?;
            Some((peer, opt))
        } else {
            None
        };
        let confidence = ConfidenceState::uniform(train.candidate_sets());
        let pseudo = train
            .candidate_sets()
            .iter()
            .zip(&confidence.disamb)
            .map(|(c, w)| pseudo_label(w, c))
            .collect();
        Ok(Self {
            config,
            train,
            test,
            augmenter,
            disamb,
            disamb_opt,
            aux,
            confidence,
            pseudo,
            epoch: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn train_set(&self) -> &PartialDataset {
        &self.train
    }

    pub fn test_set(&self) -> Option<&PartialDataset> {
        self.test.as_ref()
    }

    /// Next epoch to run.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn disambiguation(&self) -> &MlpClassifier {
        &self.disamb
    }

    /// The auxiliary network, or the peer network in symmetric mode.
    pub fn auxiliary(&self) -> Option<&MlpClassifier> {
        self.aux.as_ref().map(|(m, _)| m)
    }

    pub fn confidence(&self) -> &ConfidenceState {
        &self.confidence
    }

    /// Latest pseudo label of every training instance.
    pub fn pseudo_labels(&self) -> PseudoLabels {
        PseudoLabels {
            labels: self.pseudo.clone(),
            epoch: self.epoch,
        }
    }

    /// Installs `model` as the second network with a fresh optimizer.
    pub fn replace_auxiliary(&mut self, model: MlpClassifier) -> Result<()> {
        if model.layer_dims() != self.disamb.layer_dims() {
            return Err(Error::shape("replacement network has a different architecture"));
        }
        let opt = SgdState::new(self.config.sgd.clone(), &model)?;
        self.aux = Some((model, opt));
        Ok(())
    }

    /// Snapshot of the disambiguation network as the auxiliary network.
    pub fn init_auxiliary(&mut self) -> Result<()> {
        self.replace_auxiliary(self.disamb.copy_parameters())?;
        self.confidence.aux = self.confidence.disamb.clone();
        Ok(())
    }

    /// Runs the remaining warm-up epochs.
    pub fn warmup(&mut self) -> Result<Vec<EpochMetrics>> {
        let mut out = Vec::new();
        while self.epoch < self.config.warmup_epochs() {
            out.push(self.step_epoch()?);
        }
        Ok(out)
    }

    /// Runs every remaining epoch.
    pub fn run(&mut self) -> Result<Vec<EpochMetrics>> {
        let mut out = Vec::with_capacity(self.config.epochs - self.epoch.min(self.config.epochs));
        while self.epoch < self.config.epochs {
            out.push(self.step_epoch()?);
        }
        Ok(out)
    }

    pub fn step_epoch(&mut self) -> Result<EpochMetrics> {
        let t = self.epoch;
        let mode = self.config.mode;
        let totals = match mode {
            Mode::Syco => self.syco_epoch(t)?,
            Mode::NoCotrain | Mode::Supervised => self.disamb_epoch(t)?,
            _ if t < self.config.warmup_epochs() => self.disamb_epoch(t)?,
            _ => {
                if self.aux.is_none() {
                    self.init_auxiliary()?;
                }
                self.cotrain_epoch(t)?
            }
        };
        self.epoch += 1;
        let acc = match &self.test {
            Some(test) if !test.is_empty() && test.true_labels().is_some() => Some(evaluate(&self.disamb, test)?),
            _ => None,
        };
        let sched = &self.config.schedule;
        Ok(EpochMetrics {
            epoch: t,
            acc,
            loss_cc: totals.parts.cc,
            loss_rc: totals.parts.rc,
            loss_sim: totals.parts.sim,
            loss_ssl: totals.parts.ssl,
            loss_distill: totals.parts.distill,
            gamma: sched.gamma(t),
            mu: if mode.refines() { sched.mu(t) } else { 0.0 },
            lr: self.config.sgd.lr_at(t),
            class_noise: totals.noise.class_rate(),
            sim_noise: totals.noise.sim_rate(),
        })
    }

    fn batches(&self, t: usize) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        order.shuffle(&mut rng::stream(self.config.seed, &[tag::SHUFFLE, t as u64]));
        order.chunks(self.config.batch_size).map(<[usize]>::to_vec).collect()
    }

    fn views(&self, purpose: u64, t: usize, i: usize) -> Result<Vec<Vec<f64>>> {
        let mut r = rng::stream(self.config.seed, &[purpose, t as u64, i as u64]);
        Ok(self
            .augmenter
            .make_views(self.train.feature(i), self.config.num_augmentations, &mut r)?
            .into_inner())
    }

    fn record_batch(&mut self, batch: &[usize], local_pseudo: Vec<usize>, sim: &SimilarityBatch, totals: &mut EpochTotals) {
        if let Some(labels) = self.train.true_labels() {
            let truth: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            totals.noise.observe(&local_pseudo, sim, &truth);
        }
        for (&i, k) in batch.iter().zip(local_pseudo) {
            self.pseudo[i] = k;
        }
    }

    /// Disambiguation network alone: `L_cc + gamma L_rc`, or plain
    /// cross-entropy in supervised mode.
    fn disamb_epoch(&mut self, t: usize) -> Result<EpochTotals> {
        let gamma = if self.config.mode == Mode::Supervised {
            0.0
        } else {
            self.config.schedule.gamma(t)
        };
        let n = self.train.len() as f64;
        let mut totals = EpochTotals::default();
        for batch in self.batches(t) {
            let inv_b = 1.0 / batch.len() as f64;
            let mut traces = Vec::with_capacity(batch.len());
            let mut grads = Vec::with_capacity(batch.len());
            let mut local_pseudo = Vec::with_capacity(batch.len());
            for &i in &batch {
                let views = self.views(tag::DISAMB_VIEWS, t, i)?;
                let tr = forward_views(&self.disamb, &views)?;
                let probs = probs_of(&tr);
                let y = self.train.candidates(i);
                let w = confidence_from(&probs, y)?;
                let loss = disambiguation_loss(&probs, &w, y, gamma)?;
                check_finite(loss.total.value, "disambiguation loss", t)?;
                totals.parts.cc += loss.cc / n;
                totals.parts.rc += loss.rc / n;
                local_pseudo.push(pseudo_label(&w, y));
                self.confidence.refined[i] = w.clone();
                self.confidence.disamb[i] = w;
                traces.push(tr);
                grads.push(
                    loss.total
                        .grads
                        .into_iter()
                        .map(|g| g.into_iter().map(|v| v * inv_b).collect())
                        .collect(),
                );
            }
            let g = backprop(&self.disamb, &traces, &grads)?;
            self.disamb_opt
                .step(&mut self.disamb, &g, t)
                .map_err(|e| tag_fault(e, "disambiguation"))?;
            let sim = SimilarityBatch::from_pseudo_labels(&local_pseudo);
            self.record_batch(&batch, local_pseudo, &sim, &mut totals);
        }
        Ok(totals)
    }

    fn cotrain_epoch(&mut self, t: usize) -> Result<EpochTotals> {
        let mode = self.config.mode;
        let sched = self.config.schedule.clone();
        let gamma = sched.gamma(t);
        let weights = LossWeights {
            rc: gamma,
            aux: gamma,
            distill: if mode.distills() { gamma } else { 0.0 },
        };
        let refine = mode.refines() && t >= sched.refine_start;
        let mu = sched.mu(t);
        let n = self.train.len() as f64;
        let mut totals = EpochTotals::default();
        for batch in self.batches(t) {
            let b = batch.len();
            let (aux_model, _) = self.aux.as_ref().expect("auxiliary initialised");
            let mut d_traces = Vec::with_capacity(b);
            let mut a_traces = Vec::with_capacity(b);
            let mut d_probs = Vec::with_capacity(b);
            let mut a_probs = Vec::with_capacity(b);
            let mut rc_conf = Vec::with_capacity(b);
            let mut local_pseudo = Vec::with_capacity(b);
            for &i in &batch {
                let y = self.train.candidates(i);
                let dv = self.views(tag::DISAMB_VIEWS, t, i)?;
                let av = self.views(tag::AUX_VIEWS, t, i)?;
                let dt = forward_views(&self.disamb, &dv)?;
                let at = forward_views(aux_model, &av)?;
                let dp = probs_of(&dt);
                let ap = probs_of(&at);
                let w = confidence_from(&dp, y)?;
                let w_aux = confidence_from(&ap, y)?;
                let w_hat = if refine {
                    refine_confidence(&w, &w_aux, mu, y)
                } else {
                    w.clone()
                };
                local_pseudo.push(pseudo_label(&w, y));
                self.confidence.disamb[i] = w;
                self.confidence.aux[i] = w_aux;
                self.confidence.refined[i] = w_hat.clone();
                rc_conf.push(w_hat);
                d_traces.push(dt);
                a_traces.push(at);
                d_probs.push(dp);
                a_probs.push(ap);
            }
            let sim = SimilarityBatch::from_pseudo_labels(&local_pseudo);
            let candidates: Vec<&[bool]> = batch.iter().map(|&i| self.train.candidates(i)).collect();
            let inputs = BatchInputs {
                disamb_views: &d_probs,
                aux_views: &a_probs,
                candidates: &candidates,
                rc_confidence: &rc_conf,
                aux_target: if mode == Mode::ClassLabelAux {
                    AuxTarget::PseudoLabels(&local_pseudo)
                } else {
                    AuxTarget::Similarity(&sim)
                },
            };
            let loss = total_loss(&inputs, weights)?;
            check_finite(loss.value, "co-training loss", t)?;
            totals.parts.add_scaled(&loss.parts, b as f64 / n);

            let gd = backprop(&self.disamb, &d_traces, &loss.disamb_grads)?;
            let (aux_model, aux_opt) = self.aux.as_mut().expect("auxiliary initialised");
            let ga = backprop(aux_model, &a_traces, &loss.aux_grads)?;
            self.disamb_opt
                .step(&mut self.disamb, &gd, t)
                .map_err(|e| tag_fault(e, "disambiguation"))?;
            aux_opt.step(aux_model, &ga, t).map_err(|e| tag_fault(e, "auxiliary"))?;
            self.record_batch(&batch, local_pseudo, &sim, &mut totals);
        }
        Ok(totals)
    }

    /// Two disambiguation networks on the same views, each distilled
    /// towards the other's original-view prediction after warm-up.
    fn syco_epoch(&mut self, t: usize) -> Result<EpochTotals> {
        let gamma = self.config.schedule.gamma(t);
        let kl_weight = if t >= self.config.warmup_epochs() { gamma } else { 0.0 };
        let n = self.train.len() as f64;
        let mut totals = EpochTotals::default();
        for batch in self.batches(t) {
            let inv_b = 1.0 / batch.len() as f64;
            let (peer, _) = self.aux.as_ref().expect("peer network initialised");
            let mut traces = [Vec::with_capacity(batch.len()), Vec::with_capacity(batch.len())];
            let mut grads: [Vec<Vec<Vec<f64>>>; 2] = [Vec::new(), Vec::new()];
            let mut local_pseudo = Vec::with_capacity(batch.len());
            for &i in &batch {
                let y = self.train.candidates(i);
                let views = self.views(tag::DISAMB_VIEWS, t, i)?;
                let tr = [forward_views(&self.disamb, &views)?, forward_views(peer, &views)?];
                let probs = [probs_of(&tr[0]), probs_of(&tr[1])];
                let w = [confidence_from(&probs[0], y)?, confidence_from(&probs[1], y)?];
                for net in 0..2 {
                    let other = 1 - net;
                    let loss = disambiguation_loss(&probs[net], &w[net], y, gamma)?;
                    let kl = distill_loss(&probs[other][0], &probs[net][0])?;
                    check_finite(loss.total.value + kl.value, "symmetric co-training loss", t)?;
                    let mut g = loss.total.grads;
                    for (a, b) in g[0].iter_mut().zip(&kl.grads[0]) {
                        *a += kl_weight * b;
                    }
                    g.iter_mut().flatten().for_each(|v| *v *= inv_b);
                    grads[net].push(g);
                    if net == 0 {
                        totals.parts.cc += loss.cc / n;
                        totals.parts.rc += loss.rc / n;
                    }
                    totals.parts.distill += 0.5 * kl.value / n;
                }
                let [tr0, tr1] = tr;
                traces[0].push(tr0);
                traces[1].push(tr1);
                local_pseudo.push(pseudo_label(&w[0], y));
                let [w0, w1] = w;
                self.confidence.refined[i] = w0.clone();
                self.confidence.disamb[i] = w0;
                self.confidence.aux[i] = w1;
            }
            let g0 = backprop(&self.disamb, &traces[0], &grads[0])?;
            let (peer, peer_opt) = self.aux.as_mut().expect("peer network initialised");
            let g1 = backprop(peer, &traces[1], &grads[1])?;
            self.disamb_opt
                .step(&mut self.disamb, &g0, t)
                .map_err(|e| tag_fault(e, "first"))?;
            peer_opt.step(peer, &g1, t).map_err(|e| tag_fault(e, "second"))?;
            let sim = SimilarityBatch::from_pseudo_labels(&local_pseudo);
            self.record_batch(&batch, local_pseudo, &sim, &mut totals);
        }
        Ok(totals)
    }
}
