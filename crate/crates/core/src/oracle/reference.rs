//! Slow reference losses written as plain loops over the symbols of each
//! objective. Nothing here calls into `crate::losses`.

use crate::error::{Error, Result};

const FLOOR: f64 = 1e-12;

fn ln_floor(x: f64) -> f64 {
    if x < FLOOR {
        FLOOR.ln()
    } else {
        x.ln()
    }
}

/// Inputs for one instance. Fields a loss does not use may stay empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleInputs {
    /// Probability vectors of the instance's views, original first.
    pub views: Vec<Vec<f64>>,
    pub candidates: Vec<bool>,
    /// Label confidence for the RC term.
    pub confidence: Vec<f64>,
    /// Partner probabilities for the similarity term.
    pub partner: Vec<f64>,
    pub similar: bool,
    /// Constant target for distillation.
    pub target: Vec<f64>,
}

pub const ORACLE_LOSSES: [&str; 5] = ["cc", "rc", "sim", "ssl", "distill"];

pub fn oracle_loss(name: &str, x: &OracleInputs) -> Result<f64> {
    match name {
        "cc" => Ok(cc(&x.views, &x.candidates)),
        "rc" => Ok(rc(&x.views, &x.confidence, &x.candidates)),
        "sim" => Ok(sim(&x.views, &x.partner, x.similar)),
        "ssl" => Ok(ssl(&x.views[0], &x.views[1..], &x.candidates)),
        "distill" => Ok(kl(&x.target, &x.views[0])),
        other => Err(Error::UnknownLoss(other.to_string())),
    }
}

pub fn cc(views: &[Vec<f64>], y: &[bool]) -> f64 {
    let mut total = 0.0;
    for v in views {
        let mut inside = 0.0;
        let mut outside = 0.0;
        for k in 0..y.len() {
            if y[k] {
                inside += v[k];
            } else {
                outside += v[k];
            }
        }
        total += if outside < 0.5 { (-outside).ln_1p() } else { ln_floor(inside) };
    }
    -total / views.len() as f64
}

pub fn rc(views: &[Vec<f64>], w: &[f64], y: &[bool]) -> f64 {
    let mut total = 0.0;
    for v in views {
        for k in 0..y.len() {
            if y[k] {
                total += w[k] * ln_floor(v[k]);
            }
        }
    }
    -total / views.len() as f64
}

pub fn sim(views: &[Vec<f64>], partner: &[f64], similar: bool) -> f64 {
    let s = if similar { 1.0 } else { 0.0 };
    let mut total = 0.0;
    for v in views {
        let mut dot = 0.0;
        for k in 0..partner.len() {
            dot += v[k] * partner[k];
        }
        let dot = dot.max(FLOOR).min(1.0 - FLOOR);
        total += -s * dot.ln() - (1.0 - s) * (1.0 - dot).ln();
    }
    total / views.len() as f64
}

pub fn ssl(original: &[f64], augmented: &[Vec<f64>], y: &[bool]) -> f64 {
    if augmented.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for v in augmented {
        for k in 0..y.len() {
            if y[k] {
                total += original[k] * ln_floor(v[k]);
            }
        }
    }
    -total / augmented.len() as f64
}

pub fn kl(target: &[f64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for k in 0..p.len() {
        if target[k] > 0.0 {
            total += target[k] * (ln_floor(target[k]) - ln_floor(p[k]));
        }
    }
    total
}

/// Normalised geometric mean of per-view candidate-normalised
/// probabilities, computed with direct products.
pub fn confidence(views: &[Vec<f64>], y: &[bool]) -> Vec<f64> {
    let m = y.len();
    let mut prod = vec![1.0; m];
    for v in views {
        let mut mass = 0.0;
        for k in 0..m {
            if y[k] {
                mass += v[k];
            }
        }
        for k in 0..m {
            prod[k] *= if y[k] { v[k] / mass } else { 0.0 };
        }
    }
    let root: Vec<f64> = prod.iter().map(|p| p.powf(1.0 / views.len() as f64)).collect();
    let z: f64 = root.iter().sum();
    root.iter().map(|r| r / z).collect()
}

/// One batch of the co-training objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleBatch {
    /// `[i][view]` disambiguation probabilities, original first.
    pub disamb: Vec<Vec<Vec<f64>>>,
    /// `[i][view]` auxiliary probabilities, original first.
    pub aux: Vec<Vec<Vec<f64>>>,
    /// Constant copies of the auxiliary original-view probabilities, used
    /// as consistency and distillation targets.
    pub aux_targets: Vec<Vec<f64>>,
    pub candidates: Vec<Vec<bool>>,
    pub confidence: Vec<Vec<f64>>,
    /// Pseudo labels; pairs are similar when these agree.
    pub pseudo: Vec<usize>,
    /// Cross-entropy on pseudo labels instead of pair similarity.
    pub class_label_aux: bool,
}

/// Batch mean of `L_cc + w_rc L_rc + L_ssl + w_aux L_sup + w_kl L_kl`.
pub fn total(batch: &OracleBatch, w_rc: f64, w_aux: f64, w_kl: f64) -> f64 {
    let b = batch.disamb.len();
    let mut sum = 0.0;
    for i in 0..b {
        let y = &batch.candidates[i];
        let mut li = cc(&batch.disamb[i], y) + w_rc * rc(&batch.disamb[i], &batch.confidence[i], y);
        li += ssl(&batch.aux_targets[i], &batch.aux[i][1..], y);
        if batch.class_label_aux {
            let mut only = vec![false; y.len()];
            only[batch.pseudo[i]] = true;
            li += w_aux * cc(&batch.aux[i], &only);
        } else if b > 1 {
            let mut pair_sum = 0.0;
            for j in 0..b {
                if j != i {
                    pair_sum += sim(&batch.aux[i], &batch.aux[j][0], batch.pseudo[i] == batch.pseudo[j]);
                }
            }
            li += w_aux * pair_sum / (b - 1) as f64;
        }
        li += w_kl * kl(&batch.aux_targets[i], &batch.disamb[i][0]);
        sum += li;
    }
    sum / b as f64
}

/// Exact class and pairwise noise rates by enumerating all `n(n-1)/2`
/// pairs.
pub fn sim_noise_oracle(truth: &[usize], pseudo: &[usize]) -> (f64, f64) {
    let n = truth.len();
    let mut wrong = 0u64;
    for i in 0..n {
        if truth[i] != pseudo[i] {
            wrong += 1;
        }
    }
    let mut pair_wrong = 0u64;
    let mut pairs = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            pairs += 1;
            let same_truth = truth[i] == truth[j];
            let same_pseudo = pseudo[i] == pseudo[j];
            if same_truth != same_pseudo {
                pair_wrong += 1;
            }
        }
    }
    let class_rate = if n == 0 { 0.0 } else { wrong as f64 / n as f64 };
    let sim_rate = if pairs == 0 { 0.0 } else { pair_wrong as f64 / pairs as f64 };
    (class_rate, sim_rate)
}
