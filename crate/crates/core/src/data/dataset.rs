use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg_nn::Matrix;
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Full,
    Train,
    Test,
}

/// Features, candidate label sets and (optionally) hidden ground truth.
///
/// Training code only sees [`features`](Self::features) and
/// [`candidates`](Self::candidates); ground truth is reachable through
/// [`true_labels`](Self::true_labels) for evaluation and instrumentation.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialDataset {
    features: Matrix,
    candidates: Vec<Vec<bool>>,
    labels: Option<Vec<usize>>,
    num_classes: usize,
    split: Split,
}

impl PartialDataset {
    pub fn new(
        features: Matrix,
        candidates: Vec<Vec<bool>>,
        labels: Option<Vec<usize>>,
        num_classes: usize,
    ) -> Result<Self> {
        let ds = Self {
            features,
            candidates,
            labels,
            num_classes,
            split: Split::Full,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Dataset whose candidate sets are the singletons `{y_i}`.
    pub fn supervised(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let candidates = labels.iter().map(|&y| singleton(y, num_classes)).collect();
        Self::new(features, candidates, Some(labels), num_classes)
    }

    fn validate(&self) -> Result<()> {
        let n = self.features.rows();
        if self.num_classes == 0 {
            return Err(Error::Validation("dataset needs at least one class".into()));
        }
        if self.candidates.len() != n {
            return Err(Error::Validation(format!(
                "{} candidate sets for {n} instances",
                self.candidates.len()
            )));
        }
        for (i, mask) in self.candidates.iter().enumerate() {
            if mask.len() != self.num_classes {
                return Err(Error::Validation(format!(
                    "instance {i}: candidate mask has {} entries, expected {}",
                    mask.len(),
                    self.num_classes
                )));
            }
            if !mask.iter().any(|&b| b) {
                return Err(Error::Validation(format!("instance {i}: empty candidate set")));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                return Err(Error::Validation(format!("{} labels for {n} instances", labels.len())));
            }
            for (i, (&y, mask)) in labels.iter().zip(&self.candidates).enumerate() {
                if y >= self.num_classes {
                    return Err(Error::Validation(format!(
                        "instance {i}: label {y} out of range for {} classes",
                        self.num_classes
                    )));
                }
                if !mask[y] {
                    return Err(Error::Validation(format!(
                        "instance {i}: candidate set does not contain true label {y}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn features_mut(&mut self) -> &mut Matrix {
        &mut self.features
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn candidates(&self, i: usize) -> &[bool] {
        &self.candidates[i]
    }

    pub fn candidate_sets(&self) -> &[Vec<bool>] {
        &self.candidates
    }

    /// Evaluation-only access to ground truth.
    pub fn true_labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn mean_candidate_size(&self) -> f64 {
        let total: usize = self
            .candidates
            .iter()
            .map(|m| m.iter().filter(|&&b| b).count())
            .sum();
        total as f64 / self.len().max(1) as f64
    }

    pub fn with_candidates(&self, candidates: Vec<Vec<bool>>) -> Result<Self> {
        let ds = Self {
            candidates,
            ..self.clone()
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Replaces every candidate set by the true-label singleton.
    pub fn to_supervised(&self) -> Result<Self> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Validation("supervised training needs true labels".into()))?;
        let candidates = labels.iter().map(|&y| singleton(y, self.num_classes)).collect();
        self.with_candidates(candidates)
    }

    pub fn subset(&self, indices: &[usize], split: Split) -> Self {
        Self {
            features: self.features.select_rows(indices),
            candidates: indices.iter().map(|&i| self.candidates[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            num_classes: self.num_classes,
            split,
        }
    }

    /// Seeded split stratified by true label; `test_fraction` of each class
    /// (rounded) goes to the test side.
    pub fn split_stratified(&self, test_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Validation("stratified split needs true labels".into()))?;
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::Config(format!("test fraction must be in [0, 1), got {test_fraction}")));
        }
        let mut by_class = vec![Vec::new(); self.num_classes];
        for (i, &y) in labels.iter().enumerate() {
            by_class[y].push(i);
        }
        let mut rng = rng::stream(seed, &[tag::SPLIT]);
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for members in &mut by_class {
            members.shuffle(&mut rng);
            let k = (members.len() as f64 * test_fraction).round() as usize;
            test.extend_from_slice(&members[..k]);
            train.extend_from_slice(&members[k..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.subset(&train, Split::Train), self.subset(&test, Split::Test)))
    }
}

pub(crate) fn singleton(label: usize, num_classes: usize) -> Vec<bool> {
    let mut m = vec![false; num_classes];
    m[label] = true;
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> PartialDataset {
        let x = Matrix::from_rows(&(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        PartialDataset::supervised(x, labels, 2).unwrap()
    }

    #[test]
    fn rejects_missing_true_label() {
        let x = Matrix::zeros(1, 2);
        let err = PartialDataset::new(x, vec![vec![true, false, false]], Some(vec![2]), 3);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_empty_candidate_set() {
        let x = Matrix::zeros(1, 2);
        assert!(PartialDataset::new(x, vec![vec![false, false]], None, 2).is_err());
    }

    #[test]
    fn stratified_split_is_seeded_and_balanced() {
        let ds = toy();
        let (tr, te) = ds.split_stratified(0.2, 4).unwrap();
        assert_eq!(tr.len(), 8);
        assert_eq!(te.len(), 2);
        let te_labels = te.true_labels().unwrap();
        assert_eq!(te_labels.iter().filter(|&&y| y == 0).count(), 1);
        let (tr2, _) = ds.split_stratified(0.2, 4).unwrap();
        assert_eq!(tr, tr2);
        assert_eq!(tr.split(), Split::Train);
    }

    #[test]
    fn supervised_has_unit_candidate_sets() {
        assert_eq!(toy().mean_candidate_size(), 1.0);
    }
}
