//! End-to-end runs: split, train, summarise; and the seeded ablation suite.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Mode, TrainConfig};
use super::metrics::{EpochMetrics, RunSummary};
use super::trainer::Trainer;
use crate::data::PartialDataset;
use crate::error::{Error, Result};
use crate::linalg_nn::MlpClassifier;

/// Share of every class held out for evaluation.
pub const TEST_FRACTION: f64 = 0.2;

/// Environment variable capping suite parallelism.
pub const THREADS_ENV: &str = "ASYCO_THREADS";

#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: Vec<EpochMetrics>,
    pub summary: RunSummary,
    pub model: MlpClassifier,
}

/// Trains on `train` and evaluates on `test` every epoch.
pub fn fit(train: PartialDataset, test: Option<PartialDataset>, config: &TrainConfig) -> Result<RunResult> {
    let start = Instant::now();
    let (train_size, test_size) = (train.len(), test.as_ref().map_or(0, PartialDataset::len));
    let mut trainer = Trainer::new(train, test, config.clone())?;
    let metrics = trainer.run()?;
    let last = metrics.last();
    let best_acc = metrics.iter().filter_map(|m| m.acc).reduce(f64::max);
    let summary = RunSummary {
        mode: config.mode.to_string(),
        ablation: config.mode.ablation().map(str::to_string),
        seed: config.seed,
        epochs: config.epochs,
        final_acc: last.and_then(|m| m.acc),
        best_acc,
        final_class_noise: last.and_then(|m| m.class_noise),
        final_sim_noise: last.and_then(|m| m.sim_noise),
        train_size,
        test_size,
        wall_time_secs: start.elapsed().as_secs_f64(),
        config: config.clone(),
    };
    Ok(RunResult {
        metrics,
        summary,
        model: trainer.disambiguation().clone(),
    })
}

/// Stratified 80/20 split seeded by the run seed, then [`fit`]. Without
/// true labels the whole set is used for training and accuracy is absent.
pub fn run_training(dataset: &PartialDataset, config: &TrainConfig) -> Result<RunResult> {
    if dataset.true_labels().is_some() {
        let (train, test) = dataset.split_stratified(TEST_FRACTION, config.seed)?;
        fit(train, Some(test), config)
    } else {
        log::warn!("dataset has no true labels; training on all rows without evaluation");
        fit(dataset.clone(), None, config)
    }
}

/// One row of the ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCell {
    pub label: String,
    pub mode: Mode,
    pub num_augmentations: usize,
}

impl SuiteCell {
    pub fn new(mode: Mode, num_augmentations: usize) -> Self {
        Self {
            label: mode.to_string(),
            mode,
            num_augmentations,
        }
    }
}

/// Every ablation variant at the base augmentation count, then the full
/// method with 0 to 3 augmented views.
pub fn default_suite_cells(base: &TrainConfig) -> Vec<SuiteCell> {
    let mut cells: Vec<SuiteCell> = [
        Mode::Asyco,
        Mode::NoCotrain,
        Mode::Syco,
        Mode::NoDistill,
        Mode::NoRefine,
        Mode::ClassLabelAux,
    ]
    .into_iter()
    .map(|m| SuiteCell::new(m, base.num_augmentations))
    .collect();
    for k in 0..=crate::data::MAX_AUGMENTATIONS {
        cells.push(SuiteCell {
            label: format!("asyco-augs{k}"),
            mode: Mode::Asyco,
            num_augmentations: k,
        });
    }
    cells
}

pub const SUITE_SEEDS: [u64; 3] = [1, 2, 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: SuiteCell,
    pub seeds: Vec<u64>,
    /// Final test accuracy per successful seed.
    pub accuracies: Vec<f64>,
    pub mean: Option<f64>,
    /// Sample standard deviation; zero for a single run.
    pub std: Option<f64>,
    /// `(seed, error)` for runs that failed.
    pub failures: Vec<(u64, String)>,
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(std))
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs every cell for every seed, in parallel across runs. A failing run
/// is recorded in its cell and the suite carries on.
pub fn run_suite(
    dataset: &PartialDataset,
    base: &TrainConfig,
    cells: &[SuiteCell],
    seeds: &[u64],
) -> Result<Vec<CellResult>> {
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let run_one = |&(c, seed): &(usize, u64)| -> Result<f64> {
        let cell = &cells[c];
        let cfg = TrainConfig {
            mode: cell.mode,
            num_augmentations: cell.num_augmentations,
            seed,
            ..base.clone()
        };
        let result = run_training(dataset, &cfg)?;
        result
            .summary
            .final_acc
            .ok_or_else(|| Error::Validation("suite runs need labelled data for accuracy".into()))
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<f64>> = pool.install(|| jobs.par_iter().map(run_one).collect());

    let mut results: Vec<CellResult> = cells
        .iter()
        .map(|cell| CellResult {
            cell: cell.clone(),
            seeds: seeds.to_vec(),
            accuracies: Vec::new(),
            mean: None,
            std: None,
            failures: Vec::new(),
        })
        .collect();
    for (&(c, seed), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(acc) => results[c].accuracies.push(acc),
            Err(e) => {
                log::error!("{} seed {seed} failed: {e}", cells[c].label);
                results[c].failures.push((seed, e.to_string()));
            }
        }
    }
    for r in &mut results {
        (r.mean, r.std) = mean_std(&r.accuracies);
    }
    Ok(results)
}

/// `label,mode,num_augs,mean,std,runs,failures`, accuracies in percent.
pub fn write_suite_to<W: Write>(results: &[CellResult], w: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Validation(format!("cannot write suite table: {e}"));
    writer
        .write_record(["label", "mode", "num_augs", "mean", "std", "runs", "failures"])
        .map_err(io)?;
    let pct = |v: Option<f64>| v.map(|x| format!("{:.3}", 100.0 * x)).unwrap_or_default();
    for r in results {
        writer
            .write_record([
                r.cell.label.clone(),
                r.cell.mode.to_string(),
                r.cell.num_augmentations.to_string(),
                pct(r.mean),
                pct(r.std),
                r.accuracies.len().to_string(),
                r.failures.len().to_string(),
            ])
            .map_err(io)?;
    }
    writer.flush().map_err(|e| Error::Validation(format!("cannot flush suite table: {e}")))
}

pub fn write_suite_csv(results: &[CellResult], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_suite_to(results, file)
}
