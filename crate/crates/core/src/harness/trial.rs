//! One Monte Carlo trial: draw a user, transmit pilots, run every method.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::Array1;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, Method};
use super::scene::{sample_source, ArrayFrame};
use crate::array::{steering_fresnel, synthesize_channel, ArrayGeometry, SourceTruth};
use crate::baselines::{music3d_search, GridSpec};
use crate::distance::project_gain;
use crate::error::{Error, Result};
use crate::estimator::{Diagnostics, Sadce};
use crate::signal::{
    generate_pilots, ls_channel_estimate, noise_power_for_snr, transmit, PilotSequence, ReceivedBlock,
};

const SOURCE_DOMAIN: u64 = 1;
const NOISE_DOMAIN: u64 = 2;

/// Counter-based stream: same `(seed, domain, index)` gives the same draws on any thread.
pub fn rng_stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(domain << 56 | (index & ((1 << 56) - 1)));
    rng
}

/// Everything a trial needs that does not change between trials.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub config: ExperimentConfig,
    pub geometry: ArrayGeometry,
    pub frame: ArrayFrame,
    pub sadce: Sadce,
    pub music_grid: Option<GridSpec>,
    pilots: BTreeMap<usize, PilotSequence>,
}

impl TrialContext {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let geometry = config.array()?;
        let frame = ArrayFrame::from_config(config)?;
        let sadce = Sadce::builder(geometry.clone(), config.rotation_grid, config.solver, config.floor()?)?;
        let music_grid = if config.methods.contains(&Method::Music3d) {
            Some(config.music_grid_or_default()?)
        } else {
            None
        };
        let mut pilots = BTreeMap::new();
        for l in config.pilot_lengths() {
            pilots.insert(l, generate_pilots(l, config.pilot_power, config.pilot_kind, config.rng_seed)?);
        }
        Ok(Self {
            config: config.clone(),
            geometry,
            frame,
            sadce,
            music_grid,
            pilots,
        })
    }

    pub fn pilots(&self, length: usize) -> Result<PilotSequence> {
        match self.pilots.get(&length) {
            Some(p) => Ok(p.clone()),
            None => generate_pilots(length, self.config.pilot_power, self.config.pilot_kind, self.config.rng_seed),
        }
    }

    /// The user for trial `trial`; identical across SNR and pilot-length points.
    pub fn source(&self, trial: u64) -> Result<SourceTruth> {
        let mut rng = rng_stream(self.config.rng_seed, SOURCE_DOMAIN, trial);
        sample_source(&self.config, &self.frame, &mut rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamEstimate {
    pub u: Option<f64>,
    pub v: Option<f64>,
    pub r: Option<f64>,
    pub beta: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub abs_u: Option<f64>,
    pub abs_v: Option<f64>,
    pub abs_r: Option<f64>,
    /// `|h_hat - h|^2`
    pub sq_error: f64,
    /// `|h|^2`
    pub energy: f64,
}

impl ErrorRecord {
    pub fn nmse_db(&self) -> f64 {
        10.0 * (self.sq_error / self.energy).log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub estimate: Option<ParamEstimate>,
    pub errors: Option<ErrorRecord>,
    /// NaN when timing is disabled.
    pub runtime_ms: f64,
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

impl MethodOutcome {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub snr_db: f64,
    pub pilot_len: usize,
    pub truth: SourceTruth,
    pub outcomes: Vec<MethodOutcome>,
}

impl TrialRecord {
    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }
}

struct Raw {
    u: Option<f64>,
    v: Option<f64>,
    r: Option<f64>,
    beta: Complex64,
    h_hat: Array1<Complex64>,
    diagnostics: Option<Diagnostics>,
}

fn run_method(ctx: &TrialContext, method: Method, block: &ReceivedBlock) -> Result<Raw> {
    match method {
        Method::Sadce => {
            let est = ctx.sadce.estimate(block)?;
            Ok(Raw {
                u: Some(est.u_hat),
                v: Some(est.v_hat),
                r: Some(est.r_hat),
                beta: est.beta_hat,
                h_hat: est.h_hat,
                diagnostics: Some(est.diagnostics),
            })
        }
        Method::Ls => {
            let h = ls_channel_estimate(block)?.ls_channel;
            Ok(Raw {
                u: None,
                v: None,
                r: None,
                beta: Complex64::new(f64::NAN, f64::NAN),
                h_hat: h,
                diagnostics: None,
            })
        }
        Method::Music3d => {
            let h = ls_channel_estimate(block)?.ls_channel;
            let grid = match &ctx.music_grid {
                Some(g) => *g,
                None => ctx.config.music_grid_or_default()?,
            };
            let est = music3d_search(&h, &grid, &ctx.geometry)?;
            let b = steering_fresnel(&ctx.geometry, est.u, est.v, est.r).entries;
            let beta = project_gain(&h, &b)?;
            Ok(Raw {
                u: Some(est.u),
                v: Some(est.v),
                r: Some(est.r),
                beta,
                h_hat: b.mapv(|x| x * beta),
                diagnostics: None,
            })
        }
    }
}

/// Runs one trial at `(snr_db, pilot_len)`. Method failures are recorded in
/// the outcome, not returned as errors.
pub fn run_trial(ctx: &TrialContext, snr_db: f64, pilot_len: usize, trial: u64) -> Result<TrialRecord> {
    let cfg = &ctx.config;
    let truth = ctx.source(trial)?;
    let h = synthesize_channel(&ctx.geometry, &truth, cfg.model)?;
    let pilots = ctx.pilots(pilot_len)?;
    let sigma2 = noise_power_for_snr(snr_db, cfg.pilot_power);
    // noise draws are shared across SNR points and scaled by sigma
    let mut rng = rng_stream(cfg.rng_seed, NOISE_DOMAIN, trial);
    let block = transmit(&h, &pilots, sigma2, &mut rng)?;
    let energy: f64 = h.iter().map(|x| x.norm_sqr()).sum();

    let outcomes = cfg
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let result = run_method(ctx, method, &block);
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let runtime_ms = if cfg.record_timing { elapsed } else { f64::NAN };
            let checked = result.and_then(|raw| {
                let sq_error: f64 = raw.h_hat.iter().zip(h.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
                if !sq_error.is_finite() {
                    return Err(Error::DegenerateInput("non-finite channel estimate"));
                }
                Ok((raw, sq_error))
            });
            match checked {
                Ok((raw, sq_error)) => MethodOutcome {
                    method,
                    estimate: Some(ParamEstimate {
                        u: raw.u,
                        v: raw.v,
                        r: raw.r,
                        beta: raw.beta,
                    }),
                    errors: Some(ErrorRecord {
                        abs_u: raw.u.map(|u| (u - truth.u).abs()),
                        abs_v: raw.v.map(|v| (v - truth.v).abs()),
                        abs_r: raw.r.map(|r| (r - truth.range).abs()),
                        sq_error,
                        energy,
                    }),
                    runtime_ms,
                    failure: None,
                    diagnostics: raw.diagnostics,
                },
                Err(e) => MethodOutcome {
                    method,
                    estimate: None,
                    errors: None,
                    runtime_ms,
                    failure: Some(e.to_string()),
                    diagnostics: None,
                },
            }
        })
        .collect();

    Ok(TrialRecord {
        trial,
        snr_db,
        pilot_len,
        truth,
        outcomes,
    })
}
