use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use asyco_cli::{commands, CommandKind, ExperimentSpec, Settings};
use clap::{Args, Parser, Subcommand};

/// Asymmetric co-training for partial-label learning.
#[derive(Parser)]
#[command(name = "asyco", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate candidate label sets for a labelled dataset.
    GenData(Flags),
    /// Train one model and write metrics and a summary.
    Train(Flags),
    /// Run every ablation cell over seeds 1, 2 and 3.
    AblationSuite(Flags),
    /// Train and write per-epoch class and similarity noise rates.
    NoiseReport(Flags),
}

/// Every flag can also be given as `key=value` in a `--config` file; flags
/// win over the file.
#[derive(Args, Default)]
struct Flags {
    /// Flat key=value settings file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "CSV")]
    dataset: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    warmup: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    momentum: Option<String>,
    #[arg(long)]
    weight_decay: Option<String>,
    /// Comma-separated epochs at which the learning rate drops tenfold.
    #[arg(long)]
    milestones: Option<String>,
    /// Softmax temperature.
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// Ramp length of the loss weight.
    #[arg(long = "T", value_name = "T")]
    ramp: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    /// Refinement start, in epochs after warm-up.
    #[arg(long)]
    t0_offset: Option<String>,
    #[arg(long)]
    mu_max: Option<String>,
    #[arg(long)]
    num_augs: Option<String>,
    #[arg(long)]
    aug_sigma: Option<String>,
    #[arg(long)]
    aug_mask: Option<String>,
    /// Comma-separated hidden widths; 0 for a linear encoder.
    #[arg(long)]
    hidden: Option<String>,
    /// Z-score feature columns after loading.
    #[arg(long)]
    normalize: bool,
    /// Probability that each incorrect label joins a candidate set.
    #[arg(long)]
    q: Option<String>,
    /// uniform or instance-dependent.
    #[arg(long)]
    gen_process: Option<String>,
}

impl Flags {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        let mut cli = Settings::default();
        let pairs = [
            ("mode", &self.mode),
            ("dataset", &self.dataset),
            ("out", &self.out),
            ("seed", &self.seed),
            ("epochs", &self.epochs),
            ("warmup", &self.warmup),
            ("batch-size", &self.batch_size),
            ("lr", &self.lr),
            ("momentum", &self.momentum),
            ("weight-decay", &self.weight_decay),
            ("milestones", &self.milestones),
            ("tau", &self.tau),
            ("lambda", &self.lambda),
            ("T", &self.ramp),
            ("rho", &self.rho),
            ("t0-offset", &self.t0_offset),
            ("mu-max", &self.mu_max),
            ("num-augs", &self.num_augs),
            ("aug-sigma", &self.aug_sigma),
            ("aug-mask", &self.aug_mask),
            ("hidden", &self.hidden),
            ("q", &self.q),
            ("gen-process", &self.gen_process),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cli.set(k, v.as_str())?;
            }
        }
        if self.normalize {
            cli.set("normalize", "true")?;
        }
        s.merge(&cli);
        Ok(s)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (kind, flags) = match cli.command {
        Command::GenData(f) => (CommandKind::GenData, f),
        Command::Train(f) => (CommandKind::Train, f),
        Command::AblationSuite(f) => (CommandKind::AblationSuite, f),
        Command::NoiseReport(f) => (CommandKind::NoiseReport, f),
    };
    let spec = ExperimentSpec::resolve(kind, &flags.settings()?)?;
    commands::run(&spec)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
