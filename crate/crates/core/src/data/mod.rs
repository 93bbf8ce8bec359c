//! Dataset ingestion, candidate-set generation and augmentation.

mod augment;
mod csv_io;
mod dataset;
mod generate;
mod synthetic;

pub use augment::{AugmentConfig, AugmentedViews, Augmenter, MAX_AUGMENTATIONS};
pub use csv_io::{load_csv, load_label_first, write_csv, write_csv_to, LoadOptions};
pub use dataset::{PartialDataset, Split};
pub use generate::{
    flip_probabilities, generate_instance_dependent, generate_uniform, CandidateManifest,
    GenerationProcess, PretrainedScorer, ScorerConfig,
};
pub use synthetic::{balanced_labels, gaussian_blobs, inject_uniform_noise, BlobConfig};
