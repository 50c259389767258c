//! End-to-end sequential estimator: angles first, then range, then gain.

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use serde::Serialize;

use crate::angle::{estimate_angles, RotationGrid};
use crate::array::{steering_fresnel, ArrayGeometry};
use crate::distance::{f_vector, fit_distance, project_gain, FocusSolver};
use crate::error::{Error, Result};
use crate::signal::{ls_channel_estimate, ReceivedBlock};

/// Intermediates kept for inspection and JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub peak_iy: i64,
    pub peak_iz: i64,
    pub initial_u: f64,
    pub initial_v: f64,
    pub delta_u: f64,
    pub delta_v: f64,
    pub sigma_r: f64,
    pub inv_r: f64,
    pub rotation_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub u_hat: f64,
    pub v_hat: f64,
    pub r_hat: f64,
    pub beta_hat: Complex64,
    pub h_hat: Array1<Complex64>,
    pub diagnostics: Diagnostics,
}

/// `h = beta * b(u, v, r)` under the Fresnel model.
pub fn reconstruct(
    geom: &ArrayGeometry,
    u_hat: f64,
    v_hat: f64,
    r_hat: f64,
    beta_hat: Complex64,
    diagnostics: Diagnostics,
) -> Result<ChannelEstimate> {
    if !(r_hat > 0.0) {
        return Err(Error::NonPositiveRange(r_hat));
    }
    let h_hat = steering_fresnel(geom, u_hat, v_hat, r_hat).entries.mapv(|b| b * beta_hat);
    Ok(ChannelEstimate {
        u_hat,
        v_hat,
        r_hat,
        beta_hat,
        h_hat,
        diagnostics,
    })
}

/// Configured estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Sadce {
    geom: ArrayGeometry,
    grid: RotationGrid,
    solver: FocusSolver,
    range_floor: f64,
}

impl Sadce {
    /// Uses the default Fresnel floor of the geometry.
    pub fn new(geom: ArrayGeometry) -> Result<Self> {
        let floor = geom.default_fresnel_floor();
        Self::builder(geom, RotationGrid::default(), FocusSolver::Analytic, floor)
    }

    /// Fails when principal phases of the focus vector could wrap at `range_floor`.
    pub fn builder(
        geom: ArrayGeometry,
        grid: RotationGrid,
        solver: FocusSolver,
        range_floor: f64,
    ) -> Result<Self> {
        if !(range_floor > 0.0) {
            return Err(Error::NonPositiveRange(range_floor));
        }
        let max_phase = geom.max_focus_phase() / range_floor;
        if max_phase >= PI {
            return Err(Error::PhaseWrap {
                max_phase,
                r_floor: range_floor,
            });
        }
        Ok(Self {
            geom,
            grid,
            solver,
            range_floor,
        })
    }

    pub fn with_grid(mut self, grid: RotationGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_solver(mut self, solver: FocusSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geom
    }

    pub fn grid(&self) -> RotationGrid {
        self.grid
    }

    pub fn range_floor(&self) -> f64 {
        self.range_floor
    }

    pub fn estimate(&self, block: &ReceivedBlock) -> Result<ChannelEstimate> {
        if block.element_count() != self.geom.element_count() {
            return Err(Error::DimensionMismatch(format!(
                "block has {} rows, array has {} elements",
                block.element_count(),
                self.geom.element_count()
            )));
        }
        let cov = ls_channel_estimate(block)?;
        let angles = estimate_angles(&cov, &self.geom, &self.grid)?;
        let (u, v) = (angles.u, angles.v);

        let focus = self.solver.solve(&cov.ls_channel, u, v, &self.geom)?;
        let fit = fit_distance(&focus.t_hat, &f_vector(u, v, &self.geom))?;
        let b = steering_fresnel(&self.geom, u, v, fit.r_hat).entries;
        let beta = project_gain(&cov.ls_channel, &b)?;

        let diagnostics = Diagnostics {
            peak_iy: angles.spectrum.peak_iy,
            peak_iz: angles.spectrum.peak_iz,
            initial_u: angles.initial_u,
            initial_v: angles.initial_v,
            delta_u: angles.spectrum.refined_du,
            delta_v: angles.spectrum.refined_dv,
            sigma_r: fit.sigma_r,
            inv_r: fit.inv_r,
            rotation_evaluations: angles.spectrum.evaluations,
        };
        Ok(ChannelEstimate {
            u_hat: u,
            v_hat: v,
            r_hat: fit.r_hat,
            beta_hat: beta,
            h_hat: b.mapv(|x| x * beta),
            diagnostics,
        })
    }
}

/// `10 log10(|h_hat - h|^2 / |h|^2)`.
pub fn nmse_db(h_hat: &Array1<Complex64>, h: &Array1<Complex64>) -> f64 {
    let err: f64 = h_hat.iter().zip(h.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let norm: f64 = h.iter().map(|x| x.norm_sqr()).sum();
    10.0 * (err / norm).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{synthesize_channel, ChannelModel, SourceTruth};
    use crate::signal::{generate_pilots, transmit, PilotKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noiseless_block(geom: &ArrayGeometry, src: &SourceTruth) -> ReceivedBlock {
        let h = synthesize_channel(geom, src, ChannelModel::Fresnel).unwrap();
        let p = generate_pilots(1, 1.0, PilotKind::AllOnes, 0).unwrap();
        transmit(&h, &p, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn on_grid_noiseless_pipeline() {
        let g = ArrayGeometry::reference_41x41();
        // bins: u = -2 i_z / 41, v = 2 i_y / 41
        let src = SourceTruth::new(6.0 / 41.0, -10.0 / 41.0, 5.0, Complex64::new(0.8, -0.6)).unwrap();
        let est = Sadce::new(g.clone()).unwrap().estimate(&noiseless_block(&g, &src)).unwrap();
        assert!((est.u_hat - src.u).abs() < 1e-9);
        assert!((est.v_hat - src.v).abs() < 1e-9);
        assert!((est.r_hat - 5.0).abs() < 5e-6);
        let h = synthesize_channel(&g, &src, ChannelModel::Fresnel).unwrap();
        assert!(nmse_db(&est.h_hat, &h) < -100.0);
        assert_eq!((est.diagnostics.peak_iy, est.diagnostics.peak_iz), (-5, -3));
    }

    #[test]
    fn phase_wrap_precondition() {
        let g = ArrayGeometry::reference_41x41();
        let ok = Sadce::builder(g.clone(), RotationGrid::default(), FocusSolver::Analytic, 3.0);
        assert!(ok.is_ok());
        let bad = Sadce::builder(g, RotationGrid::default(), FocusSolver::Analytic, 0.5);
        assert!(matches!(bad, Err(Error::PhaseWrap { .. })));
    }

    #[test]
    fn zero_gain_reconstructs_zero() {
        let g = ArrayGeometry::quarter_wavelength(5, 5, 0.03).unwrap();
        let diag = Diagnostics {
            peak_iy: 0,
            peak_iz: 0,
            initial_u: 0.0,
            initial_v: 0.0,
            delta_u: 0.0,
            delta_v: 0.0,
            sigma_r: 0.0,
            inv_r: 0.5,
            rotation_evaluations: 0,
        };
        let est = reconstruct(&g, 0.1, 0.2, 2.0, Complex64::new(0.0, 0.0), diag).unwrap();
        assert!(est.h_hat.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn rejects_wrong_block_size() {
        let g = ArrayGeometry::quarter_wavelength(9, 9, 0.03).unwrap();
        let other = ArrayGeometry::quarter_wavelength(7, 9, 0.03).unwrap();
        let src = SourceTruth::new(0.1, 0.1, 2.0, Complex64::new(1.0, 0.0)).unwrap();
        let est = Sadce::new(g).unwrap().estimate(&noiseless_block(&other, &src));
        assert!(matches!(est, Err(Error::DimensionMismatch(_))));
    }
}
