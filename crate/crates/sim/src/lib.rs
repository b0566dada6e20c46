//! Experiment harness for spatially coupled sparse regression codes.
//!
//! Configuration parsing, seeded parallel Monte Carlo trials, state evolution
//! predictions, and CSV/JSON outputs. The numerics live in `scsparc-core`.

pub mod basefile;
pub mod config;
mod error;
pub mod experiment;
pub mod format;
pub mod output;
pub mod predict;

pub use config::{BaseSpec, ExperimentConfig, Preset};
pub use error::{SimError, SimResult};
pub use experiment::{run_experiment, Aggregate, PointResult, RunOptions, TrialRecord};
pub use predict::{predict, PredictPoint};
