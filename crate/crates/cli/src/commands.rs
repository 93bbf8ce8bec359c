use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{bail, Context, Result};
use asyco::cotrain::{
    default_suite_cells, run_suite, run_training, write_metrics_csv, write_suite_csv, CellResult, EpochMetrics,
    RunResult, RunSummary, SUITE_SEEDS,
};
use asyco::data::{
    generate_instance_dependent, generate_uniform, load_csv, load_label_first, write_csv, CandidateManifest,
    GenerationProcess, LoadOptions, PartialDataset, PretrainedScorer, ScorerConfig,
};
use serde::{Deserialize, Serialize};

use crate::settings::{CommandKind, ExperimentSpec, Generation};

pub const DATASET_FILE: &str = "dataset.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.txt";
pub const SUITE_CSV: &str = "suite.csv";
pub const SUITE_JSON: &str = "suite.json";
pub const NOISE_FILE: &str = "noise.csv";
pub const NOISE_LONG_FILE: &str = "noise_long.csv";

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub candidates: CandidateManifest,
    pub experiment: ExperimentSpec,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainReport {
    #[serde(flatten)]
    pub run: RunSummary,
    pub candidates: Option<CandidateManifest>,
    pub experiment: ExperimentSpec,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub cells: Vec<CellResult>,
    pub candidates: Option<CandidateManifest>,
    pub experiment: ExperimentSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub epoch: usize,
    pub class_noise_rate: Option<f64>,
    pub sim_noise_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLongRow {
    pub epoch: usize,
    pub series: String,
    pub rate: f64,
}

pub fn run(spec: &ExperimentSpec) -> Result<()> {
    std::fs::create_dir_all(&spec.out).with_context(|| format!("cannot create {}", spec.out.display()))?;
    match spec.command {
        CommandKind::GenData => gen_data(spec),
        CommandKind::Train => train(spec),
        CommandKind::AblationSuite => ablation_suite(spec),
        CommandKind::NoiseReport => noise_report(spec),
    }
}

fn has_header(path: &Path) -> Result<bool> {
    let mut first = String::new();
    BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?)
        .read_line(&mut first)
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(first.split(',').any(|f| f.trim() == "candidates"))
}

/// Loads a dataset in the native format (header with `candidates`) or a
/// headerless label-first file with zero- or one-based labels.
pub fn load_dataset(path: &Path, normalize: bool) -> Result<PartialDataset> {
    if has_header(path)? {
        return Ok(load_csv(
            path,
            &LoadOptions {
                num_classes: None,
                normalize,
            },
        )?);
    }
    let mut ds = load_label_first(path, 0)?;
    let labels = ds.true_labels().unwrap_or_default().to_vec();
    if !labels.is_empty() && !labels.contains(&0) {
        log::info!("{}: labels start at 1, shifting to zero-based", path.display());
        let shifted = labels.iter().map(|y| y - 1).collect();
        ds = PartialDataset::supervised(ds.features().clone(), shifted, ds.num_classes() - 1)?;
    }
    if normalize {
        ds.features_mut().standardize_columns();
    }
    Ok(ds)
}

fn regenerate(ds: PartialDataset, g: &Generation) -> Result<(PartialDataset, CandidateManifest)> {
    let labels = ds
        .true_labels()
        .context("candidate generation needs a `label` column")?
        .to_vec();
    let m = ds.num_classes();
    let mut manifest = CandidateManifest {
        process: g.process,
        seed: g.seed,
        num_instances: ds.len(),
        num_classes: m,
        mean_candidate_size: 0.0,
        q: g.q,
        scorer_hash: None,
        scorer_epochs: None,
        scorer_training_log: None,
    };
    let candidates = match g.process {
        GenerationProcess::Uniform => generate_uniform(&labels, m, g.q.unwrap_or_default(), g.seed)?,
        GenerationProcess::InstanceDependent => {
            let scorer = PretrainedScorer::train(
                &ds,
                &ScorerConfig {
                    seed: g.seed,
                    ..Default::default()
                },
            )?;
            manifest.scorer_hash = Some(scorer.fingerprint());
            manifest.scorer_epochs = Some(scorer.epochs());
            manifest.scorer_training_log = Some(scorer.training_log.clone());
            generate_instance_dependent(&ds, &scorer, g.seed)?
        }
    };
    let ds = ds.with_candidates(candidates)?;
    manifest.mean_candidate_size = ds.mean_candidate_size();
    Ok((ds, manifest))
}

fn prepare(spec: &ExperimentSpec) -> Result<(PartialDataset, Option<CandidateManifest>)> {
    let ds = load_dataset(&spec.dataset, spec.normalize)?;
    match &spec.generation {
        Some(g) => regenerate(ds, g).map(|(d, m)| (d, Some(m))),
        None => Ok((ds, None)),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn write_config(spec: &ExperimentSpec) -> Result<()> {
    let path = spec.out.join(CONFIG_FILE);
    std::fs::write(&path, spec.to_settings().to_text()).with_context(|| format!("cannot write {}", path.display()))
}

pub fn gen_data(spec: &ExperimentSpec) -> Result<()> {
    let g = spec.generation.as_ref().context("no generation parameters")?;
    let ds = load_dataset(&spec.dataset, spec.normalize)?;
    let (ds, candidates) = regenerate(ds, g)?;
    write_csv(&ds, spec.out.join(DATASET_FILE))?;
    write_json(
        &spec.out.join(MANIFEST_FILE),
        &Manifest {
            candidates,
            experiment: spec.clone(),
        },
    )?;
    write_config(spec)?;
    println!(
        "wrote {} instances, mean candidate set size {:.3}, to {}",
        ds.len(),
        ds.mean_candidate_size(),
        spec.out.join(DATASET_FILE).display()
    );
    Ok(())
}

fn fmt_acc(acc: Option<f64>) -> String {
    acc.map_or_else(|| "n/a".into(), |a| format!("{:.2}%", 100.0 * a))
}

fn train_and_record(spec: &ExperimentSpec) -> Result<RunResult> {
    let (ds, candidates) = prepare(spec)?;
    let result = run_training(&ds, &spec.train)
        .with_context(|| format!("training in mode {} failed", spec.train.mode))?;
    write_metrics_csv(&result.metrics, spec.out.join(METRICS_FILE))?;
    write_json(
        &spec.out.join(SUMMARY_FILE),
        &TrainReport {
            run: result.summary.clone(),
            candidates,
            experiment: spec.clone(),
        },
    )?;
    write_config(spec)?;
    Ok(result)
}

pub fn train(spec: &ExperimentSpec) -> Result<()> {
    let result = train_and_record(spec)?;
    let s = &result.summary;
    let tag = s.ablation.as_deref().map(|a| format!(" [{a}]")).unwrap_or_default();
    println!(
        "{}{tag}: final accuracy {}, best {} after {} epochs",
        s.mode,
        fmt_acc(s.final_acc),
        fmt_acc(s.best_acc),
        s.epochs
    );
    Ok(())
}

pub fn ablation_suite(spec: &ExperimentSpec) -> Result<()> {
    let (ds, candidates) = prepare(spec)?;
    if ds.true_labels().is_none() {
        bail!("the ablation suite needs a `label` column to measure accuracy");
    }
    let cells = default_suite_cells(&spec.train);
    let results = run_suite(&ds, &spec.train, &cells, &SUITE_SEEDS)?;
    write_suite_csv(&results, spec.out.join(SUITE_CSV))?;
    write_json(
        &spec.out.join(SUITE_JSON),
        &SuiteReport {
            cells: results.clone(),
            candidates,
            experiment: spec.clone(),
        },
    )?;
    write_config(spec)?;
    println!("{:<18} {:>8} {:>8} {:>5}", "cell", "mean", "std", "runs");
    for r in &results {
        let pm = |v: Option<f64>| v.map_or_else(|| "n/a".into(), |x| format!("{:.2}", 100.0 * x));
        println!("{:<18} {:>8} {:>8} {:>5}", r.cell.label, pm(r.mean), pm(r.std), r.accuracies.len());
        for (seed, e) in &r.failures {
            println!("  seed {seed} failed: {e}");
        }
    }
    if results.iter().all(|r| r.accuracies.is_empty()) {
        bail!("every run of the suite failed");
    }
    Ok(())
}

pub fn noise_rows(metrics: &[EpochMetrics]) -> Vec<NoiseRow> {
    metrics
        .iter()
        .map(|m| NoiseRow {
            epoch: m.epoch,
            class_noise_rate: m.class_noise,
            sim_noise_rate: m.sim_noise,
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_noise_csv(path: &Path) -> Result<Vec<NoiseRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Epoch-over-epoch rises and falls of a series.
fn trend(values: &[f64]) -> (usize, usize) {
    values.windows(2).fold((0, 0), |(up, down), w| {
        if w[1] > w[0] {
            (up + 1, down)
        } else if w[1] < w[0] {
            (up, down + 1)
        } else {
            (up, down)
        }
    })
}

pub fn noise_report(spec: &ExperimentSpec) -> Result<()> {
    let result = train_and_record(spec)?;
    let rows = noise_rows(&result.metrics);
    if rows.iter().all(|r| r.class_noise_rate.is_none()) {
        bail!("noise rates need true labels in the training data");
    }
    write_rows(&spec.out.join(NOISE_FILE), &rows)?;
    let long: Vec<NoiseLongRow> = rows
        .iter()
        .flat_map(|r| {
            [("class", r.class_noise_rate), ("sim", r.sim_noise_rate)]
                .into_iter()
                .filter_map(move |(series, rate)| {
                    rate.map(|rate| NoiseLongRow {
                        epoch: r.epoch,
                        series: series.into(),
                        rate,
                    })
                })
        })
        .collect();
    write_rows(&spec.out.join(NOISE_LONG_FILE), &long)?;

    let after: Vec<&NoiseRow> = rows
        .iter()
        .filter(|r| r.epoch >= spec.train.warmup_epochs())
        .collect();
    let below = after
        .iter()
        .filter(|r| matches!((r.sim_noise_rate, r.class_noise_rate), (Some(s), Some(c)) if s < c))
        .count();
    let class: Vec<f64> = rows.iter().filter_map(|r| r.class_noise_rate).collect();
    let sim: Vec<f64> = rows.iter().filter_map(|r| r.sim_noise_rate).collect();
    let (cu, cd) = trend(&class);
    let (su, sd) = trend(&sim);
    println!("similarity noise below class noise in {below}/{} epochs after warm-up", after.len());
    println!("class noise: {cd} falls, {cu} rises; similarity noise: {sd} falls, {su} rises");
    if let Some(last) = rows.last() {
        println!(
            "final epoch {}: class {:.4}, similarity {:.4}",
            last.epoch,
            last.class_noise_rate.unwrap_or(f64::NAN),
            last.sim_noise_rate.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
