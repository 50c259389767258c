//! Monte Carlo SNR sweep on the built-in scene, written as CSV to stdout.
//!
//! `cargo run --release --example snr_sweep -- 50` runs 50 trials per point.

use std::io;

use sadce::harness::presets;
use sadce::harness::report::write_csv;
use sadce::harness::sweep;

fn main() -> anyhow::Result<()> {
    let mut cfg = presets::paper_fig2()?;
    cfg.trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(40);
    let result = sweep(&cfg, None)?;
    write_csv(&result, io::stdout().lock())?;
    Ok(())
}
