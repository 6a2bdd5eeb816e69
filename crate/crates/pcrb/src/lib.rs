//! Experiment driver for `pcrb-core`: JSON configs in, CSV tables out.
//!
//! * [`config`]: the experiment config and its validation.
//! * [`experiments`]: power pattern, PCRB-vs-SNR and Monte Carlo runners.
//! * [`properties`]: the randomized invariant suite.
//! * [`table`]: result tables and their CSV form.

pub mod config;
pub mod experiments;
pub mod properties;
pub mod table;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use experiments::{run_experiment, Scenario};
pub use table::ResultTable;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numeric(#[from] pcrb_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
