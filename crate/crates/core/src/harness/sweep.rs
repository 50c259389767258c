//! Monte Carlo sweeps over SNR and pilot length.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Method};
use super::trial::{run_trial, TrialContext, TrialRecord};
use crate::error::{Error, Result};

/// One `(pilot_len, snr_db)` operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub pilot_len: usize,
}

/// Pilot length outer, SNR inner.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    cfg.pilot_lengths()
        .into_iter()
        .flat_map(|pilot_len| cfg.snr_grid.iter().map(move |&snr_db| SweepPoint { snr_db, pilot_len }))
        .collect()
}

/// Aggregate over the trials of one method at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: Method,
    pub snr_db: f64,
    pub pilot_len: usize,
    pub trials: usize,
    pub failures: usize,
    pub rmse_u: f64,
    pub rmse_v: f64,
    pub rmse_r_m: f64,
    /// Ratio of summed error energy to summed channel energy, in dB.
    pub nmse_db: f64,
    pub mean_runtime_ms: f64,
    /// Medians count failed trials as infinite error.
    pub median_abs_u: f64,
    pub median_abs_v: f64,
    pub median_abs_r_m: f64,
    pub median_nmse_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }

    pub fn row(&self, method: Method, snr_db: f64, pilot_len: usize) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.snr_db == snr_db && r.pilot_len == pilot_len)
    }
}

fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (values.iter().map(|x| x * x).sum::<f64>() / values.len() as f64).sqrt()
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Reduces the records of one point. Records must already be in trial order.
pub fn aggregate(method: Method, point: SweepPoint, records: &[&TrialRecord]) -> SweepRow {
    let outcomes: Vec<_> = records.iter().filter_map(|r| r.outcome(method)).collect();
    let ok: Vec<_> = outcomes.iter().filter_map(|o| o.errors.as_ref()).collect();
    let failures = outcomes.len() - ok.len();

    let collect = |f: &dyn Fn(&super::trial::ErrorRecord) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|e| f(e)).collect() };
    let err_u = collect(&|e| e.abs_u);
    let err_v = collect(&|e| e.abs_v);
    let err_r = collect(&|e| e.abs_r);

    let sq: f64 = ok.iter().map(|e| e.sq_error).sum();
    let energy: f64 = ok.iter().map(|e| e.energy).sum();
    let nmse_db = if ok.is_empty() { f64::NAN } else { 10.0 * (sq / energy).log10() };

    let with_failures = |mut v: Vec<f64>| {
        if v.is_empty() {
            return f64::NAN;
        }
        v.extend(std::iter::repeat_n(f64::INFINITY, failures));
        median(v)
    };
    let runtime: Vec<f64> = outcomes.iter().map(|o| o.runtime_ms).collect();
    let mean_runtime_ms = if runtime.is_empty() {
        f64::NAN
    } else {
        runtime.iter().sum::<f64>() / runtime.len() as f64
    };

    SweepRow {
        method,
        snr_db: point.snr_db,
        pilot_len: point.pilot_len,
        trials: outcomes.len(),
        failures,
        rmse_u: rms(&err_u),
        rmse_v: rms(&err_v),
        rmse_r_m: rms(&err_r),
        nmse_db,
        mean_runtime_ms,
        median_abs_u: with_failures(err_u),
        median_abs_v: with_failures(err_v),
        median_abs_r_m: with_failures(err_r),
        median_nmse_db: with_failures(ok.iter().map(|e| e.nmse_db()).collect()),
    }
}

/// Runs every `(point, trial)` pair on a pool of `threads` workers (all cores
/// when `None`). Results are collected in index order before reduction, so
/// the output does not depend on the thread count.
pub fn sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<SweepResult> {
    let ctx = TrialContext::new(cfg)?;
    let points = sweep_points(cfg);
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| (0..cfg.trials as u64).map(move |t| (p, t)))
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, t)| run_trial(&ctx, points[p].snr_db, points[p].pilot_len, t))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::with_capacity(cfg.methods.len() * points.len());
    for &method in &cfg.methods {
        for (p, point) in points.iter().enumerate() {
            let chunk: Vec<&TrialRecord> = records[p * cfg.trials..(p + 1) * cfg.trials].iter().collect();
            rows.push(aggregate(method, *point, &chunk));
        }
    }
    Ok(SweepResult { rows, records })
}
