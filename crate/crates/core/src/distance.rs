//! Range and gain recovery once the direction is known.
//!
//! The steering vector factors as `b = Q(u, v) t(u, v, r)` with `Q` a diagonal
//! of angle-only phases and `t` carrying the range. Minimizing the reduced
//! MUSIC form `t^H Q^H U_n U_n^H Q t` subject to `t[center] = 1` yields the
//! focus vector `t`, whose phase is `f(u, v) / r`. An affine least-squares fit
//! of that phase against `f` returns `1/r`.
//!
//! For the rank-one covariance the noise projector is `I - g g^H` with
//! `g = Q^H h / |h|`, which is exactly singular along `g`. The analytic solver
//! takes the `eps -> 0` limit of the ridge-regularized solution, `g / g[center]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{steering_fresnel, ArrayGeometry};
use crate::error::{Error, Result};
use crate::signal::{ls_channel_estimate, ReceivedBlock};

/// Largest array for which dense `M x M` algebra is allowed.
pub const DENSE_LIMIT: usize = 441;

/// Default relative threshold on `|g[center]| / |g|` for the analytic solver.
pub const CENTER_TOLERANCE: f64 = 1e-9;

/// Angle/range split of the channel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusDecomposition {
    /// Phases of the diagonal of `Q(u, v)`, i.e. `-(2 pi / lambda) p_m(u, v)`.
    pub q_phases: Array1<f64>,
    /// Estimated range-dependent factor, normalized so `t_hat[center] = 1`.
    pub t_hat: Array1<Complex64>,
    pub selector_index: usize,
}

fn focus_vector(
    h: &Array1<Complex64>,
    u: f64,
    v: f64,
    geom: &ArrayGeometry,
) -> Result<(Array1<f64>, Array1<Complex64>)> {
    if h.len() != geom.element_count() {
        return Err(Error::DimensionMismatch(format!(
            "channel estimate has {} entries, array has {}",
            h.len(),
            geom.element_count()
        )));
    }
    let norm = h.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::DegenerateInput("channel estimate is zero"));
    }
    let k = geom.wavenumber();
    let q_phases: Array1<f64> = geom
        .elements()
        .map(|(_, m_y, m_z)| -k * geom.linear_path(m_y, m_z, u, v))
        .collect();
    let g = Array1::from_shape_fn(h.len(), |m| {
        Complex64::from_polar(1.0 / norm, -q_phases[m]) * h[m]
    });
    Ok((q_phases, g))
}

/// Closed-form focus vector `t = g / g[center]`, `O(M)`.
pub fn solve_t_analytic(
    h: &Array1<Complex64>,
    u: f64,
    v: f64,
    geom: &ArrayGeometry,
) -> Result<FocusDecomposition> {
    let (q_phases, g) = focus_vector(h, u, v, geom)?;
    let c = geom.center_index();
    // |g| = 1 by construction
    let ratio = g[c].norm();
    if !(ratio > CENTER_TOLERANCE) {
        return Err(Error::IllConditioned { ratio });
    }
    let pivot = g[c];
    let mut t_hat = g.mapv(|x| x / pivot);
    t_hat[c] = Complex64::new(1.0, 0.0);
    Ok(FocusDecomposition {
        q_phases,
        t_hat,
        selector_index: c,
    })
}

/// Ridge-regularized focus vector
/// `t = T_eps^{-1} c / (c^H T_eps^{-1} c)` with `T_eps = (1 + eps) I - g g^H`,
/// solved densely. Limited to `M <= DENSE_LIMIT`.
pub fn solve_t_dense(
    h: &Array1<Complex64>,
    u: f64,
    v: f64,
    geom: &ArrayGeometry,
    ridge: f64,
) -> Result<FocusDecomposition> {
    let m = geom.element_count();
    if m > DENSE_LIMIT {
        return Err(Error::DenseSizeExceeded {
            m,
            limit: DENSE_LIMIT,
        });
    }
    if !(ridge > 0.0) {
        return Err(Error::DegenerateInput("ridge must be positive"));
    }
    let (q_phases, g) = focus_vector(h, u, v, geom)?;
    let c = geom.center_index();

    let t = DMatrix::from_fn(m, m, |i, j| {
        let diag = if i == j { 1.0 + ridge } else { 0.0 };
        Complex64::new(diag, 0.0) - g[i] * g[j].conj()
    });
    let mut rhs = DVector::from_element(m, Complex64::new(0.0, 0.0));
    rhs[c] = Complex64::new(1.0, 0.0);
    let x = t
        .lu()
        .solve(&rhs)
        .ok_or(Error::DegenerateInput("regularized focus matrix is singular"))?;
    let denom = x[c];
    let t_hat = Array1::from_shape_fn(m, |i| x[i] / denom);
    Ok(FocusDecomposition {
        q_phases,
        t_hat,
        selector_index: c,
    })
}

/// Range-phase template `f_m = -(pi d^2 / lambda)(m_z^2 + m_y^2 - (m_z u - m_y v)^2)`,
/// so that `angle(t_m) = f_m / r`.
pub fn f_vector(u: f64, v: f64, geom: &ArrayGeometry) -> Array1<f64> {
    let scale = -PI * geom.spacing() * geom.spacing() / geom.wavelength();
    geom.elements()
        .map(|(_, m_y, m_z)| {
            let (my, mz) = (m_y as f64, m_z as f64);
            let x = mz * u - my * v;
            scale * (mz * mz + my * my - x * x)
        })
        .collect()
}

/// Affine least-squares fit `a = sigma_r + f / r`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceFit {
    pub f_vector: Array1<f64>,
    /// Principal-value phases of `t_hat`.
    pub a_hat: Array1<f64>,
    /// Intercept absorbing the common phase offset.
    pub sigma_r: f64,
    pub inv_r: f64,
    pub r_hat: f64,
}

/// Fits `[sigma_r, 1/r] = (B^T B)^{-1} B^T a` with `B = [1, f]`.
///
/// Valid while `max |f_m| / r < pi`; beyond that the principal phases wrap.
pub fn fit_distance(t_hat: &Array1<Complex64>, f: &Array1<f64>) -> Result<DistanceFit> {
    if t_hat.len() != f.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} focus entries for {} template entries",
            t_hat.len(),
            f.len()
        )));
    }
    let a_hat: Array1<f64> = t_hat.mapv(|x| x.arg());
    let n = f.len() as f64;
    let f_mean = f.sum() / n;
    let a_mean = a_hat.sum() / n;
    // centered normal equations
    let (mut sff, mut sfa) = (0.0, 0.0);
    for (fi, ai) in f.iter().zip(a_hat.iter()) {
        let df = fi - f_mean;
        sff += df * df;
        sfa += df * (ai - a_mean);
    }
    let scale = f.iter().map(|x| x * x).sum::<f64>();
    if !(sff > 1e-14 * scale) || scale == 0.0 {
        return Err(Error::SingularFit);
    }
    let inv_r = sfa / sff;
    let sigma_r = a_mean - inv_r * f_mean;
    if !(inv_r > 0.0) {
        return Err(Error::NonPositiveDistance { inv_r });
    }
    Ok(DistanceFit {
        f_vector: f.clone(),
        a_hat,
        sigma_r,
        inv_r,
        r_hat: 1.0 / inv_r,
    })
}

/// Gain projection `beta = b^H h / (b^H b)` for a given steering vector.
pub fn project_gain(h: &Array1<Complex64>, b: &Array1<Complex64>) -> Result<Complex64> {
    let bb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    if !(bb > 0.0) {
        return Err(Error::DegenerateInput("steering vector is zero"));
    }
    let bh: Complex64 = b.iter().zip(h.iter()).map(|(bi, hi)| bi.conj() * hi).sum();
    Ok(bh / bb)
}

/// Complex gain at the estimated parameters. With all-ones pilots this is the
/// pilot-averaged matched filter `(1/L) sum_l b^H y_l / (b^H b)`.
pub fn estimate_gain(block: &ReceivedBlock, u: f64, v: f64, r: f64, geom: &ArrayGeometry) -> Result<Complex64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveRange(r));
    }
    let h_ls = ls_channel_estimate(block)?;
    let b = steering_fresnel(geom, u, v, r);
    project_gain(&h_ls.ls_channel, &b.entries)
}

/// Which solver produces the focus vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum FocusSolver {
    /// `O(M)` closed form.
    #[default]
    Analytic,
    /// Dense ridge solve, desk-scale only.
    Dense { ridge: f64 },
}

impl FocusSolver {
    pub fn solve(&self, h: &Array1<Complex64>, u: f64, v: f64, geom: &ArrayGeometry) -> Result<FocusDecomposition> {
        match *self {
            FocusSolver::Analytic => solve_t_analytic(h, u, v, geom),
            FocusSolver::Dense { ridge } => solve_t_dense(h, u, v, geom, ridge),
        }
    }
}
