use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sadce::array::ChannelModel;
use sadce::harness::config::{ExperimentConfig, Method, PilotLengths};
use sadce::harness::presets;
use sadce::harness::report::write_csv;
use sadce::harness::{run_trial, sweep, TrialContext};

#[derive(Parser)]
#[command(name = "sadce", version, about = "Near-field UPA channel estimation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override rng_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (all cores when omitted)
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated subset of sadce, ls, music3d
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<Method>>,
    /// Synthesis model
    #[arg(long)]
    model: Option<ChannelModel>,
    /// Override the trial count
    #[arg(long)]
    trials: Option<usize>,
    /// Report NaN runtimes so output is byte-reproducible
    #[arg(long)]
    no_timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and print the estimate with diagnostics as JSON
    Estimate {
        #[command(flatten)]
        common: Common,
        /// SNR in dB (first entry of snr_grid by default)
        #[arg(long)]
        snr: Option<f64>,
        /// Pilot length (first configured length by default)
        #[arg(long)]
        pilot_len: Option<usize>,
        /// Trial index selecting the user draw and noise stream
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Monte Carlo sweep from a config file, CSV output
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Built-in SNR sweep preset
    PaperFig2 {
        #[command(flatten)]
        common: Common,
    },
    /// Built-in pilot-length sweep preset
    PaperFig3 {
        #[command(flatten)]
        common: Common,
    },
    /// Run the oracle self-checks
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn load(common: &Common, preset: Option<ExperimentConfig>) -> Result<ExperimentConfig> {
    let mut cfg = match (&common.config, preset) {
        (Some(path), _) => {
            ExperimentConfig::from_path(path).with_context(|| format!("reading {}", path.display()))?
        }
        (None, Some(p)) => p,
        (None, None) => bail!("--config is required"),
    };
    if let Some(seed) = common.seed {
        cfg.rng_seed = seed;
    }
    if let Some(methods) = &common.method {
        cfg.methods = methods.clone();
    }
    if let Some(model) = common.model {
        cfg.model = model;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    if common.no_timing {
        cfg.record_timing = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run_sweep(common: &Common, cfg: &ExperimentConfig) -> Result<()> {
    let result = sweep(cfg, common.threads)?;
    let mut out = output(&common.out)?;
    write_csv(&result, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Estimate {
            common,
            snr,
            pilot_len,
            trial,
        } => {
            let mut cfg = load(&common, Some(presets::paper_fig2()?))?;
            let snr = snr.unwrap_or(cfg.snr_grid[0]);
            let pilot_len = pilot_len.unwrap_or(cfg.pilot_lengths()[0]);
            cfg.pilot_length = PilotLengths::One(pilot_len);
            let ctx = TrialContext::new(&cfg)?;
            let record = run_trial(&ctx, snr, pilot_len, trial)?;
            let mut out = output(&common.out)?;
            serde_json::to_writer_pretty(&mut out, &record)?;
            writeln!(out)?;
        }
        Command::Sweep { common } => {
            let cfg = load(&common, None)?;
            run_sweep(&common, &cfg)?;
        }
        Command::PaperFig2 { common } => {
            let cfg = load(&common, Some(presets::paper_fig2()?))?;
            run_sweep(&common, &cfg)?;
        }
        Command::PaperFig3 { common } => {
            let cfg = load(&common, Some(presets::paper_fig3()?))?;
            run_sweep(&common, &cfg)?;
        }
        Command::Selftest { seed } => {
            let checks = sadce::selftest::run_all(seed);
            let mut failed = 0;
            for c in &checks {
                println!("{:<24} {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                bail!("{failed} of {} checks failed", checks.len());
            }
        }
    }
    Ok(())
}
