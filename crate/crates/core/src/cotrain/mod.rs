//! Training orchestration for every method variant.

mod config;
mod experiment;
mod labels;
mod metrics;
mod trainer;

pub use config::{Mode, TrainConfig, DEFAULT_HIDDEN};
pub use experiment::{
    default_suite_cells, fit, run_suite, run_training, thread_cap, write_suite_csv, write_suite_to, CellResult,
    RunResult, SuiteCell, SUITE_SEEDS, TEST_FRACTION, THREADS_ENV,
};
pub use labels::{noise_rates, pseudo_label, pseudo_labels, similarity_labels, NoiseCounts, PseudoLabels, SimilarityBatch};
pub use metrics::{read_metrics_csv, write_metrics_csv, write_metrics_to, EpochMetrics, RunSummary, METRICS_HEADER};
pub use trainer::{evaluate, Trainer};
