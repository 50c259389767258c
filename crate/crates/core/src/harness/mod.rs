//! Monte Carlo harness: configuration, scene sampling, trials, sweeps and output.

pub mod config;
pub mod presets;
pub mod report;
pub mod scene;
pub mod sweep;
pub mod trial;

pub use config::{ExperimentConfig, Method};
pub use sweep::{sweep, SweepResult, SweepRow};
pub use trial::{run_trial, TrialContext, TrialRecord};
