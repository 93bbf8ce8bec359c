use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use crate::error::{Error, Result};

/// One row of the metrics CSV. Loss components are unweighted epoch means;
/// rates are `None` when ground truth is unavailable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub acc: Option<f64>,
    pub loss_cc: f64,
    pub loss_rc: f64,
    pub loss_sim: f64,
    pub loss_ssl: f64,
    pub loss_distill: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lr: f64,
    pub class_noise: Option<f64>,
    pub sim_noise: Option<f64>,
}

pub const METRICS_HEADER: &str =
    "epoch,acc,loss_cc,loss_rc,loss_sim,loss_ssl,loss_distill,gamma,mu,lr,class_noise,sim_noise";

pub fn write_metrics_to<W: Write>(metrics: &[EpochMetrics], w: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for row in metrics {
        writer
            .serialize(row)
            .map_err(|e| Error::Validation(format!("cannot serialise metrics: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Validation(format!("cannot flush metrics: {e}")))
}

pub fn write_metrics_csv(metrics: &[EpochMetrics], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_metrics_to(metrics, file).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<EpochMetrics>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        path: path.into(),
        line: 0,
        message: e.to_string(),
    })?;
    reader
        .deserialize()
        .enumerate()
        .map(|(row, rec)| {
            rec.map_err(|e| Error::Parse {
                path: path.into(),
                line: row + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Final JSON record of a run, including the resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: String,
    pub ablation: Option<String>,
    pub seed: u64,
    pub epochs: usize,
    pub final_acc: Option<f64>,
    pub best_acc: Option<f64>,
    pub final_class_noise: Option<f64>,
    pub final_sim_noise: Option<f64>,
    pub train_size: usize,
    pub test_size: usize,
    pub wall_time_secs: f64,
    pub config: TrainConfig,
}

impl RunSummary {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(epoch: usize) -> EpochMetrics {
        EpochMetrics {
            epoch,
            acc: Some(0.1 + epoch as f64 / 7.0),
            loss_cc: 1.0 / 3.0,
            loss_rc: 2.5e-17,
            loss_sim: 0.0,
            loss_ssl: 0.3,
            loss_distill: 1e300,
            gamma: 0.02,
            mu: 0.0,
            lr: 0.1,
            class_noise: None,
            sim_noise: Some(0.125),
        }
    }

    #[test]
    fn header_is_fixed_and_roundtrip_is_lossless() {
        let rows = vec![row(0), row(1)];
        let mut buf = Vec::new();
        write_metrics_to(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), METRICS_HEADER);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_metrics_csv(&rows, &p).unwrap();
        assert_eq!(read_metrics_csv(&p).unwrap(), rows);
    }
}
