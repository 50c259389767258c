//! Built-in experiment presets.

use super::config::ExperimentConfig;
use crate::error::Result;

pub const SNR_SWEEP_TOML: &str = include_str!("../../presets/snr_sweep.toml");
pub const PILOT_SWEEP_TOML: &str = include_str!("../../presets/pilot_sweep.toml");

/// Accuracy versus SNR, `L = 1`.
pub fn paper_fig2() -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml_str(SNR_SWEEP_TOML)
}

/// Accuracy versus pilot length at 10 dB.
pub fn paper_fig3() -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml_str(PILOT_SWEEP_TOML)
}
