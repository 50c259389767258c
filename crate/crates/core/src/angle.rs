//! Angle estimation from the anti-diagonal of the rank-one covariance.
//!
//! Multiplying mirror-symmetric channel entries cancels the range-dependent
//! quadratic phase, leaving an `M_Y x M_Z` matrix whose entries are a pure
//! 2D complex exponential in `(u, v)`. A 2D DFT locates the coarse peak and a
//! phase-ramp ("rotation") search around it refines the estimate.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::array::ArrayGeometry;
use crate::error::{Error, Result};
use crate::signal::CovarianceEstimate;

const TIE_TOL: f64 = 1e-12;

/// Angle-only matrix built from mirror-pair products of the channel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiDiagonalMatrix {
    /// Row index `a` runs over `m_y + (M_Y-1)/2`, column `b` over `m_z + (M_Z-1)/2`.
    pub values: Array2<Complex64>,
}

/// `R_a[a, b] = h[m] conj(h[M-1-m])` for the element `m` at `(a, b)`.
pub fn build_anti_diagonal(cov: &CovarianceEstimate, geom: &ArrayGeometry) -> Result<AntiDiagonalMatrix> {
    let m_total = geom.element_count();
    if cov.len() != m_total {
        return Err(Error::DimensionMismatch(format!(
            "channel estimate has {} entries, array has {m_total}",
            cov.len()
        )));
    }
    let h = &cov.ls_channel;
    let my = geom.m_y_count();
    // m = M_Y * b + a with a, b the unsigned element coordinates
    let values = Array2::from_shape_fn((my, geom.m_z_count()), |(a, b)| {
        let m = my * b + a;
        h[m] * h[m_total - 1 - m].conj()
    });
    Ok(AntiDiagonalMatrix { values })
}

/// Normalized forward 2D DFT,
/// `G[i, j] = 1/(N1 N2) sum_a sum_b X[a, b] exp(-j 2 pi (a i / N1 + b j / N2))`.
pub fn dft2(input: &Array2<Complex64>) -> Array2<Complex64> {
    let (rows, cols) = input.dim();
    let mut data = input.to_owned();
    if rows == 0 || cols == 0 {
        return data;
    }
    let mut planner = FftPlanner::<f64>::new();

    let row_fft = planner.plan_fft_forward(cols);
    let mut buf = vec![Complex64::new(0.0, 0.0); cols];
    for mut row in data.rows_mut() {
        buf.iter_mut().zip(row.iter()).for_each(|(d, s)| *d = *s);
        row_fft.process(&mut buf);
        row.iter_mut().zip(buf.iter()).for_each(|(d, s)| *d = *s);
    }

    let col_fft = planner.plan_fft_forward(rows);
    let mut buf = vec![Complex64::new(0.0, 0.0); rows];
    for mut col in data.columns_mut() {
        buf.iter_mut().zip(col.iter()).for_each(|(d, s)| *d = *s);
        col_fft.process(&mut buf);
        col.iter_mut().zip(buf.iter()).for_each(|(d, s)| *d = *s);
    }

    let scale = 1.0 / (rows * cols) as f64;
    data.mapv_inplace(|x| x * scale);
    data
}

/// Maps an unsigned DFT bin to the signed range `[-floor(n/2), floor(n/2)]`.
pub fn signed_bin(i: usize, n: usize) -> i64 {
    if i > n / 2 {
        i as i64 - n as i64
    } else {
        i as i64
    }
}

/// Inverse of [`signed_bin`].
pub fn unsigned_bin(s: i64, n: usize) -> usize {
    s.rem_euclid(n as i64) as usize
}

/// Location of the strongest DFT bin in signed coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPeak {
    pub iy: i64,
    pub iz: i64,
    pub magnitude: f64,
}

/// Maximum-modulus bin. Bins within a relative `1e-12` of the maximum are
/// resolved toward the lexicographically smallest signed pair.
pub fn find_peak(grid: &Array2<Complex64>) -> SpectrumPeak {
    let (ny, nz) = grid.dim();
    let mut best = SpectrumPeak {
        iy: i64::MAX,
        iz: i64::MAX,
        magnitude: f64::NEG_INFINITY,
    };
    for ((a, b), val) in grid.indexed_iter() {
        let mag = val.norm();
        let (iy, iz) = (signed_bin(a, ny), signed_bin(b, nz));
        let tol = TIE_TOL * best.magnitude.abs().max(mag);
        let better = if (mag - best.magnitude).abs() <= tol {
            (iy, iz) < (best.iy, best.iz)
        } else {
            mag > best.magnitude
        };
        if better {
            best = SpectrumPeak { iy, iz, magnitude: mag };
        }
    }
    best
}

/// Coarse estimate from the DFT peak:
/// `u = -lambda i_z / (2 d M_Z)`, `v = lambda i_y / (2 d M_Y)`.
pub fn initial_angles(iy: i64, iz: i64, geom: &ArrayGeometry) -> (f64, f64) {
    let scale = geom.wavelength() / (2.0 * geom.spacing());
    let u = -scale * iz as f64 / geom.m_z_count() as f64;
    let v = scale * iy as f64 / geom.m_y_count() as f64;
    (u, v)
}

/// DFT bin `(iy, iz)` of the anti-diagonal matrix after the phase ramps
/// `exp(j a dv)` (rows) and `exp(j b du)` (columns).
pub fn rotated_value(ra: &AntiDiagonalMatrix, iy: i64, iz: i64, du: f64, dv: f64) -> Complex64 {
    let (ny, nz) = ra.values.dim();
    let theta_v = dv - 2.0 * PI * iy as f64 / ny as f64;
    let theta_u = du - 2.0 * PI * iz as f64 / nz as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for ((a, b), x) in ra.values.indexed_iter() {
        acc += x * Complex64::from_polar(1.0, a as f64 * theta_v + b as f64 * theta_u);
    }
    acc / (ny * nz) as f64
}

/// Density of the rotation search.
///
/// `g_y` and `g_z` subdivide one DFT bin, so the angular resolution after
/// refinement is `lambda / (2 d M G)`. The search covers the full rotation
/// range `|dv| <= lambda pi / (d M_Y)`, `|du| <= lambda pi / (d M_Z)` with a
/// symmetric grid that contains zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationGrid {
    pub g_y: usize,
    pub g_z: usize,
}

impl Default for RotationGrid {
    fn default() -> Self {
        Self { g_y: 64, g_z: 64 }
    }
}

impl RotationGrid {
    pub fn new(g_y: usize, g_z: usize) -> Result<Self> {
        if g_y < 2 || g_z < 2 {
            return Err(Error::InvalidGrid(format!(
                "rotation grid factors must be >= 2, got ({g_y}, {g_z})"
            )));
        }
        Ok(Self { g_y, g_z })
    }

    /// Offsets searched for `dv`.
    pub fn offsets_v(&self, geom: &ArrayGeometry) -> Vec<f64> {
        rotation_offsets(self.g_y, geom.m_y_count(), geom)
    }

    /// Offsets searched for `du`.
    pub fn offsets_u(&self, geom: &ArrayGeometry) -> Vec<f64> {
        rotation_offsets(self.g_z, geom.m_z_count(), geom)
    }

    /// Number of rotated-bin evaluations per estimate.
    pub fn point_count(&self, geom: &ArrayGeometry) -> usize {
        self.offsets_v(geom).len() * self.offsets_u(geom).len()
    }
}

fn rotation_offsets(refine: usize, n: usize, geom: &ArrayGeometry) -> Vec<f64> {
    let step = 2.0 * PI / (n as f64 * refine as f64);
    let limit = geom.wavelength() * PI / (geom.spacing() * n as f64);
    let half = (limit / step + 1e-9).floor() as i64;
    (-half..=half).map(|k| k as f64 * step).collect()
}

/// Result of the rotation search.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedAngles {
    pub u: f64,
    pub v: f64,
    pub delta_u: f64,
    pub delta_v: f64,
    /// `|rotated_value|` at the selected offsets.
    pub objective: f64,
    /// Number of grid points evaluated.
    pub evaluations: usize,
}

/// Grid search of `|rotated_value|` around the coarse peak, followed by
/// `u = (lambda / 2d)(du/2pi - i_z/M_Z)`, `v = (lambda / 2d)(i_y/M_Y - dv/2pi)`.
///
/// The objective for all offsets is formed as `W_v^T R_a W_u`, which costs
/// `O(M N_u + M_Y N_u N_v)` instead of `O(M N_u N_v)` for point-wise
/// evaluation.
pub fn refine_angles(
    ra: &AntiDiagonalMatrix,
    iy: i64,
    iz: i64,
    grid: &RotationGrid,
    geom: &ArrayGeometry,
) -> RefinedAngles {
    let (ny, nz) = ra.values.dim();
    let offs_v = grid.offsets_v(geom);
    let offs_u = grid.offsets_u(geom);
    let base_v = -2.0 * PI * iy as f64 / ny as f64;
    let base_u = -2.0 * PI * iz as f64 / nz as f64;

    let w_u = Array2::from_shape_fn((nz, offs_u.len()), |(b, k)| {
        Complex64::from_polar(1.0, b as f64 * (offs_u[k] + base_u))
    });
    let w_v = Array2::from_shape_fn((offs_v.len(), ny), |(k, a)| {
        Complex64::from_polar(1.0, a as f64 * (offs_v[k] + base_v))
    });
    let partial = ra.values.dot(&w_u);
    let values = w_v.dot(&partial);

    let norm = 1.0 / (ny * nz) as f64;
    let half_v = (offs_v.len() / 2) as i64;
    let half_u = (offs_u.len() / 2) as i64;
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    let mut best_key = (i64::MAX, i64::MAX, i64::MAX);
    for ((kv, ku), val) in values.indexed_iter() {
        let mag = val.norm() * norm;
        let (sv, su) = (kv as i64 - half_v, ku as i64 - half_u);
        let key = (sv * sv + su * su, sv, su);
        let tol = TIE_TOL * best.0.abs().max(mag);
        let better = if (mag - best.0).abs() <= tol {
            key < best_key
        } else {
            mag > best.0
        };
        if better {
            best = (mag, kv, ku);
            best_key = key;
        }
    }

    let (objective, kv, ku) = best;
    let delta_v = offs_v[kv];
    let delta_u = offs_u[ku];
    let scale = geom.wavelength() / (2.0 * geom.spacing());
    let u = scale * (delta_u / (2.0 * PI) - iz as f64 / nz as f64);
    let v = scale * (iy as f64 / ny as f64 - delta_v / (2.0 * PI));
    RefinedAngles {
        u,
        v,
        delta_u,
        delta_v,
        objective,
        evaluations: values.len(),
    }
}

/// Everything produced by the angle stage.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSpectrum {
    pub dft_grid: Array2<Complex64>,
    pub peak_iy: i64,
    pub peak_iz: i64,
    pub refined_du: f64,
    pub refined_dv: f64,
    pub grid: RotationGrid,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleEstimate {
    pub u: f64,
    pub v: f64,
    pub initial_u: f64,
    pub initial_v: f64,
    pub spectrum: AngleSpectrum,
}

/// Runs anti-diagonal extraction, DFT peak search and rotation refinement.
pub fn estimate_angles(
    cov: &CovarianceEstimate,
    geom: &ArrayGeometry,
    grid: &RotationGrid,
) -> Result<AngleEstimate> {
    let ra = build_anti_diagonal(cov, geom)?;
    let spectrum = dft2(&ra.values);
    let peak = find_peak(&spectrum);
    let (initial_u, initial_v) = initial_angles(peak.iy, peak.iz, geom);
    let refined = refine_angles(&ra, peak.iy, peak.iz, grid, geom);
    Ok(AngleEstimate {
        u: refined.u,
        v: refined.v,
        initial_u,
        initial_v,
        spectrum: AngleSpectrum {
            dft_grid: spectrum,
            peak_iy: peak.iy,
            peak_iz: peak.iz,
            refined_du: refined.delta_u,
            refined_dv: refined.delta_v,
            grid: *grid,
            evaluations: refined.evaluations,
        },
    })
}
