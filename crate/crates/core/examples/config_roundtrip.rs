//! Load a preset, edit it in code, and write it back as TOML for `sadce sweep --config`.

use sadce::array::ChannelModel;
use sadce::harness::config::{ExperimentConfig, Method};
use sadce::harness::presets;

fn main() -> anyhow::Result<()> {
    let mut cfg = presets::paper_fig2()?;
    cfg.methods = vec![Method::Sadce, Method::Ls];
    cfg.model = ChannelModel::Exact;
    cfg.snr_grid = vec![0.0, 15.0, 30.0];
    cfg.trials = 25;
    cfg.validate()?;
    let text = cfg.to_toml_string()?;
    print!("{text}");
    let back = ExperimentConfig::from_toml_str(&text)?;
    assert_eq!(back.snr_grid, cfg.snr_grid);
    assert!(ExperimentConfig::from_toml_str(&format!("{text}\ntypo_key = 1\n")).is_err());
    Ok(())
}
