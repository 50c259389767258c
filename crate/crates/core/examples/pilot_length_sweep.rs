//! NMSE against pilot length at a fixed SNR, with the LS reference.

use sadce::harness::config::Method;
use sadce::harness::{presets, sweep};

fn main() -> anyhow::Result<()> {
    let mut cfg = presets::paper_fig3()?;
    cfg.trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(40);
    let result = sweep(&cfg, None)?;
    println!("{:>4} {:>12} {:>12}", "L", "SADCE [dB]", "LS [dB]");
    for l in cfg.pilot_lengths() {
        let snr = cfg.snr_grid[0];
        let s = result.row(Method::Sadce, snr, l).expect("row");
        let ls = result.row(Method::Ls, snr, l).expect("row");
        println!("{l:>4} {:>12.2} {:>12.2}", s.nmse_db, ls.nmse_db);
    }
    Ok(())
}
