//! Independent reference implementations and numeric verifiers.
//!
//! These are deliberately slow loops kept apart from [`crate::losses`] so
//! the two can be checked against each other.

mod finite_diff;
mod reference;

pub use finite_diff::{
    finite_diff_check, finite_diff_total, relative_error, FiniteDiffBatch, FiniteDiffProblem, FiniteDiffReport,
};
pub use reference::{
    cc, confidence, kl, oracle_loss, rc, sim, sim_noise_oracle, ssl, total, OracleBatch, OracleInputs,
    ORACLE_LOSSES,
};
