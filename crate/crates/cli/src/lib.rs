//! Experiment runner behind the `asyco` binary.

pub mod commands;
pub mod settings;

pub use settings::{CommandKind, ExperimentSpec, Settings};
