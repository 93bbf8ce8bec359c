//! Flat `key=value` settings shared by config files and command-line flags,
//! and their resolution into a fully specified experiment.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use asyco::cotrain::{Mode, TrainConfig};
use asyco::data::GenerationProcess;
use serde::{Deserialize, Serialize};

/// Every recognised key. Flags use the same names with a `--` prefix.
pub const KEYS: [&str; 24] = [
    "mode",
    "dataset",
    "out",
    "seed",
    "epochs",
    "warmup",
    "batch-size",
    "lr",
    "momentum",
    "weight-decay",
    "milestones",
    "tau",
    "lambda",
    "T",
    "rho",
    "t0-offset",
    "mu-max",
    "num-augs",
    "aug-sigma",
    "aug-mask",
    "hidden",
    "normalize",
    "q",
    "gen-process",
];

const TRAINING_KEYS: [&str; 18] = [
    "mode",
    "epochs",
    "warmup",
    "batch-size",
    "lr",
    "momentum",
    "weight-decay",
    "milestones",
    "tau",
    "lambda",
    "T",
    "rho",
    "t0-offset",
    "mu-max",
    "num-augs",
    "aug-sigma",
    "aug-mask",
    "hidden",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    GenData,
    Train,
    AblationSuite,
    NoiseReport,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GenData => "gen-data",
            Self::Train => "train",
            Self::AblationSuite => "ablation-suite",
            Self::NoiseReport => "noise-report",
        }
    }

    /// Keys that make no sense for this command.
    fn rejected_keys(self) -> &'static [&'static str] {
        match self {
            Self::GenData => &TRAINING_KEYS,
            Self::AblationSuite => &["mode"],
            Self::Train | Self::NoiseReport => &[],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Reads a `key=value` file. Blank lines and lines starting with `#`
    /// are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut out = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key=value, got `{line}`", path.display(), n + 1))?;
            let k = k.trim();
            if out.values.contains_key(k) {
                bail!("{}:{}: duplicate key `{k}`", path.display(), n + 1);
            }
            out.set(k, v.trim()).with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
        Ok(out)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KEYS.contains(&key) {
            bail!("unknown setting `{key}`");
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Entries of `other` replace ours.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `key=value` lines in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .filter_map(|k| self.get(k).map(|v| format!("{k}={v}\n")))
            .collect()
    }

    fn parsed<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("invalid value `{v}` for `{key}`: {e}")))
            .transpose()
    }
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| anyhow!("invalid entry `{s}` in `{key}`: {e}")))
        .collect()
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub process: GenerationProcess,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub seed: u64,
}

/// A fully resolved command invocation, echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub command: CommandKind,
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub normalize: bool,
    /// Candidate sets are regenerated from the true labels when present.
    pub generation: Option<Generation>,
    pub train: TrainConfig,
}

impl ExperimentSpec {
    pub fn resolve(command: CommandKind, s: &Settings) -> Result<Self> {
        let rejected: Vec<&str> = command
            .rejected_keys()
            .iter()
            .copied()
            .filter(|k| s.get(k).is_some())
            .collect();
        if !rejected.is_empty() {
            bail!("`{}` does not accept: {}", command.as_str(), rejected.join(", "));
        }
        let dataset: PathBuf = s.get("dataset").ok_or_else(|| anyhow!("`dataset` is required"))?.into();
        let out: PathBuf = s.get("out").ok_or_else(|| anyhow!("`out` is required"))?.into();
        let normalize = s.parsed::<bool>("normalize")?.unwrap_or(false);

        let mut cfg = TrainConfig::default();
        if let Some(m) = s.parsed::<Mode>("mode")? {
            cfg.mode = m;
        }
        if let Some(v) = s.parsed("seed")? {
            cfg.seed = v;
        }
        if let Some(v) = s.parsed("epochs")? {
            cfg.epochs = v;
        }
        if let Some(v) = s.parsed("warmup")? {
            cfg.set_warmup(v);
        }
        if let Some(v) = s.parsed::<usize>("t0-offset")? {
            cfg.schedule.refine_start = cfg.schedule.warmup_epochs + v;
        }
        if let Some(v) = s.parsed("batch-size")? {
            cfg.batch_size = v;
        }
        if let Some(v) = s.parsed("lr")? {
            cfg.sgd.base_lr = v;
        }
        if let Some(v) = s.parsed("momentum")? {
            cfg.sgd.momentum = v;
        }
        if let Some(v) = s.parsed("weight-decay")? {
            cfg.sgd.weight_decay = v;
        }
        if let Some(v) = s.get("milestones") {
            cfg.sgd.milestones = parse_list("milestones", v)?;
        }
        if let Some(v) = s.parsed("tau")? {
            cfg.temperature = v;
        }
        if let Some(v) = s.parsed("lambda")? {
            cfg.schedule.lambda = v;
        }
        if let Some(v) = s.parsed::<usize>("T")? {
            if v == 0 {
                bail!("`T` must be positive");
            }
            cfg.schedule.ramp_epochs = v;
        }
        if let Some(v) = s.parsed("rho")? {
            cfg.schedule.rho = v;
        }
        if let Some(v) = s.parsed("mu-max")? {
            cfg.schedule.mu_max = v;
        }
        if let Some(v) = s.parsed("num-augs")? {
            cfg.num_augmentations = v;
        }
        if let Some(v) = s.parsed("aug-sigma")? {
            cfg.augment.noise_sigma = v;
        }
        if let Some(v) = s.parsed("aug-mask")? {
            cfg.augment.mask_fraction = v;
        }
        if let Some(v) = s.get("hidden") {
            let widths = parse_list("hidden", v)?;
            cfg.hidden = if widths == [0] { Vec::new() } else { widths };
        }

        let q = s.parsed::<f64>("q")?;
        let process = s.parsed::<GenerationProcess>("gen-process")?;
        let generation = match (process, q) {
            (None, None) => None,
            (Some(GenerationProcess::InstanceDependent), Some(_)) => {
                bail!("`q` applies to uniform generation only")
            }
            (Some(GenerationProcess::Uniform), None) => bail!("uniform generation needs `q`"),
            (p, q) => Some(Generation {
                process: p.unwrap_or(GenerationProcess::Uniform),
                q,
                seed: cfg.seed,
            }),
        };
        if let Some(q) = q {
            if !(0.0..=1.0).contains(&q) {
                bail!("`q` must lie in [0, 1], got {q}");
            }
        }
        if command == CommandKind::GenData {
            if generation.is_none() {
                bail!("`gen-data` needs `q` or `gen-process`");
            }
        } else {
            cfg.validate()?;
        }
        Ok(Self {
            command,
            dataset,
            out,
            normalize,
            generation,
            train: cfg,
        })
    }

    /// Settings that resolve back to this experiment.
    pub fn to_settings(&self) -> Settings {
        let c = &self.train;
        let mut s = Settings::default();
        let mut put = |k: &str, v: String| {
            s.values.insert(k.to_string(), v);
        };
        put("dataset", self.dataset.display().to_string());
        put("out", self.out.display().to_string());
        put("seed", c.seed.to_string());
        put("normalize", self.normalize.to_string());
        if let Some(g) = &self.generation {
            put(
                "gen-process",
                match g.process {
                    GenerationProcess::Uniform => "uniform",
                    GenerationProcess::InstanceDependent => "instance-dependent",
                }
                .to_string(),
            );
            if let Some(q) = g.q {
                put("q", q.to_string());
            }
        }
        if self.command != CommandKind::GenData {
            put("mode", c.mode.to_string());
            put("epochs", c.epochs.to_string());
            put("warmup", c.schedule.warmup_epochs.to_string());
            put("t0-offset", (c.schedule.refine_start - c.schedule.warmup_epochs).to_string());
            put("batch-size", c.batch_size.to_string());
            put("lr", c.sgd.base_lr.to_string());
            put("momentum", c.sgd.momentum.to_string());
            put("weight-decay", c.sgd.weight_decay.to_string());
            put("milestones", join(&c.sgd.milestones));
            put("tau", c.temperature.to_string());
            put("lambda", c.schedule.lambda.to_string());
            put("T", c.schedule.ramp_epochs.to_string());
            put("rho", c.schedule.rho.to_string());
            put("mu-max", c.schedule.mu_max.to_string());
            put("num-augs", c.num_augmentations.to_string());
            put("aug-sigma", c.augment.noise_sigma.to_string());
            put("aug-mask", c.augment.mask_fraction.to_string());
            put("hidden", if c.hidden.is_empty() { "0".into() } else { join(&c.hidden) });
        }
        for k in self.command.rejected_keys() {
            s.values.remove(*k);
        }
        s
    }
}
