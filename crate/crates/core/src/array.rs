//! Uniform planar array geometry and near-field steering vectors.
//!
//! Antennas sit on a `M_Y x M_Z` grid in the array's YOZ plane with spacing
//! `d`. Element `(m_y, m_z)` is placed at `(0, m_y d, -m_z d)` and a source
//! with direction cosines `(u, v)` at range `r` sits at `r (w, v, u)` where
//! `w = sqrt(1 - u^2 - v^2)` is the boresight component. With this placement
//! the exact propagation distance expands to
//!
//! ```text
//! r_m - r ~= p_m + q_m
//! p_m = d (m_z u - m_y v)
//! q_m = d^2 / (2 r) (m_z^2 + m_y^2 - (m_z u - m_y v)^2)
//! ```
//!
//! and both steering conventions use the phase `-(2 pi / lambda)(r_m - r)`.

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of an odd-by-odd uniform planar array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    m_y_count: usize,
    m_z_count: usize,
    spacing: f64,
    wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(m_y_count: usize, m_z_count: usize, spacing: f64, wavelength: f64) -> Result<Self> {
        if m_y_count == 0 || m_y_count % 2 == 0 || m_z_count == 0 || m_z_count % 2 == 0 {
            return Err(Error::InvalidGeometry(format!(
                "element counts must be positive and odd, got {m_y_count} x {m_z_count}"
            )));
        }
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(Error::NonPositiveWavelength(wavelength));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            m_y_count,
            m_z_count,
            spacing,
            wavelength,
        })
    }

    /// Array with the default quarter-wavelength spacing.
    pub fn quarter_wavelength(m_y_count: usize, m_z_count: usize, wavelength: f64) -> Result<Self> {
        Self::new(m_y_count, m_z_count, wavelength / 4.0, wavelength)
    }

    /// 41 x 41 elements at 10 GHz (lambda = 3 cm), d = lambda / 4.
    pub fn reference_41x41() -> Self {
        Self::quarter_wavelength(41, 41, 0.03).expect("static geometry is valid")
    }

    pub fn m_y_count(&self) -> usize {
        self.m_y_count
    }

    pub fn m_z_count(&self) -> usize {
        self.m_z_count
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Total element count `M = M_Y * M_Z`.
    pub fn element_count(&self) -> usize {
        self.m_y_count * self.m_z_count
    }

    /// `(M_Y - 1) / 2`
    pub fn half_y(&self) -> i64 {
        (self.m_y_count as i64 - 1) / 2
    }

    /// `(M_Z - 1) / 2`
    pub fn half_z(&self) -> i64 {
        (self.m_z_count as i64 - 1) / 2
    }

    /// Linear index of the center element, `(M - 1) / 2`.
    pub fn center_index(&self) -> usize {
        (self.element_count() - 1) / 2
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Maps signed element coordinates to the linear index
    /// `m = M_Y m_z + m_y + (M - 1) / 2`.
    pub fn antenna_index(&self, m_y: i64, m_z: i64) -> Result<usize> {
        if m_y.abs() > self.half_y() || m_z.abs() > self.half_z() {
            return Err(Error::IndexOutOfRange { m_y, m_z });
        }
        let m = self.m_y_count as i64 * m_z + m_y + self.center_index() as i64;
        Ok(m as usize)
    }

    /// Inverse of [`antenna_index`](Self::antenna_index).
    pub fn antenna_coords(&self, m: usize) -> Result<(i64, i64)> {
        if m >= self.element_count() {
            return Err(Error::DimensionMismatch(format!(
                "linear index {m} outside array of {} elements",
                self.element_count()
            )));
        }
        Ok(self.coords_unchecked(m))
    }

    #[inline]
    fn coords_unchecked(&self, m: usize) -> (i64, i64) {
        let m_y = (m % self.m_y_count) as i64 - self.half_y();
        let m_z = (m / self.m_y_count) as i64 - self.half_z();
        (m_y, m_z)
    }

    /// Iterates `(m, m_y, m_z)` in linear index order.
    pub fn elements(&self) -> impl Iterator<Item = (usize, i64, i64)> + '_ {
        (0..self.element_count()).map(move |m| {
            let (m_y, m_z) = self.coords_unchecked(m);
            (m, m_y, m_z)
        })
    }

    /// Position of element `m` in the array frame, meters.
    pub fn antenna_position(&self, m: usize) -> Result<[f64; 3]> {
        let (m_y, m_z) = self.antenna_coords(m)?;
        Ok([0.0, m_y as f64 * self.spacing, -(m_z as f64) * self.spacing])
    }

    /// Physical extent along Y, `(M_Y - 1) d`.
    pub fn aperture_y(&self) -> f64 {
        (self.m_y_count - 1) as f64 * self.spacing
    }

    /// Physical extent along Z, `(M_Z - 1) d`.
    pub fn aperture_z(&self) -> f64 {
        (self.m_z_count - 1) as f64 * self.spacing
    }

    pub fn max_aperture(&self) -> f64 {
        self.aperture_y().max(self.aperture_z())
    }

    /// Default minimum range for which the Fresnel model is trusted.
    pub fn default_fresnel_floor(&self) -> f64 {
        10.0 * self.max_aperture()
    }

    /// Upper bound of `|f_m|` over all elements and directions, i.e. the
    /// largest distance-dependent phase at unit range.
    pub fn max_focus_phase(&self) -> f64 {
        let hy = self.half_y() as f64;
        let hz = self.half_z() as f64;
        PI * self.spacing * self.spacing / self.wavelength * (hy * hy + hz * hz)
    }

    /// Linear (angle-only) path difference `p_m = d (m_z u - m_y v)`.
    #[inline]
    pub fn linear_path(&self, m_y: i64, m_z: i64, u: f64, v: f64) -> f64 {
        self.spacing * (m_z as f64 * u - m_y as f64 * v)
    }

    /// Quadratic path difference `q_m` of the Fresnel expansion.
    #[inline]
    pub fn quadratic_path(&self, m_y: i64, m_z: i64, u: f64, v: f64, r: f64) -> f64 {
        let (my, mz) = (m_y as f64, m_z as f64);
        let x = mz * u - my * v;
        self.spacing * self.spacing / (2.0 * r) * (mz * mz + my * my - x * x)
    }
}

/// Rayleigh distance `2 D^2 / lambda`.
pub fn rayleigh_distance(aperture: f64, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::NonPositiveWavelength(wavelength));
    }
    if aperture < 0.0 {
        return Err(Error::InvalidGeometry(format!(
            "aperture must be non-negative, got {aperture}"
        )));
    }
    Ok(2.0 * aperture * aperture / wavelength)
}

/// Which propagation model produces the array response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    /// Spherical wavefront with exact element distances.
    Exact,
    /// Second-order (Fresnel) expansion of the element distances.
    #[default]
    Fresnel,
}

impl std::fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelModel::Exact => f.write_str("exact"),
            ChannelModel::Fresnel => f.write_str("fresnel"),
        }
    }
}

impl std::str::FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ChannelModel::Exact),
            "fresnel" => Ok(ChannelModel::Fresnel),
            other => Err(Error::Config(format!("unknown channel model '{other}'"))),
        }
    }
}

/// Ground-truth parameters of a single line-of-sight user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceTruth {
    /// `u = sin(theta)`
    pub u: f64,
    /// `v = cos(theta) sin(phi)`
    pub v: f64,
    /// Range to the array center, meters.
    pub range: f64,
    /// Complex channel gain.
    pub gain: Complex64,
}

impl SourceTruth {
    pub fn new(u: f64, v: f64, range: f64, gain: Complex64) -> Result<Self> {
        if !(u.is_finite() && v.is_finite()) || u * u + v * v > 1.0 + 1e-12 {
            return Err(Error::InvalidSource(format!(
                "direction cosines ({u}, {v}) do not describe a physical direction"
            )));
        }
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::NonPositiveRange(range));
        }
        Ok(Self { u, v, range, gain })
    }

    /// Builds a source from azimuth `theta` and elevation `phi` (radians).
    pub fn from_angles(theta: f64, phi: f64, range: f64, gain: Complex64) -> Result<Self> {
        Self::new(theta.sin(), theta.cos() * phi.sin(), range, gain)
    }

    /// Boresight direction cosine `w = sqrt(1 - u^2 - v^2)`.
    pub fn boresight_cosine(&self) -> f64 {
        (1.0 - self.u * self.u - self.v * self.v).max(0.0).sqrt()
    }

    /// Source position in the array frame, `r (w, v, u)`.
    pub fn position(&self) -> [f64; 3] {
        let r = self.range;
        [r * self.boresight_cosine(), r * self.v, r * self.u]
    }

    /// Fails when the source is closer than `floor` meters.
    pub fn check_floor(&self, floor: f64) -> Result<()> {
        if self.range < floor {
            return Err(Error::InvalidSource(format!(
                "range {} m is below the Fresnel validity floor {floor} m",
                self.range
            )));
        }
        Ok(())
    }
}

/// Unit-modulus array response.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub entries: Array1<Complex64>,
    pub model: ChannelModel,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_inner(self) -> Array1<Complex64> {
        self.entries
    }
}

/// Fresnel steering vector, `exp(-j k (p_m + q_m))`.
pub fn steering_fresnel(geom: &ArrayGeometry, u: f64, v: f64, r: f64) -> SteeringVector {
    let k = geom.wavenumber();
    let entries = geom
        .elements()
        .map(|(_, m_y, m_z)| {
            let phase = geom.linear_path(m_y, m_z, u, v) + geom.quadratic_path(m_y, m_z, u, v, r);
            Complex64::from_polar(1.0, -k * phase)
        })
        .collect();
    SteeringVector {
        entries,
        model: ChannelModel::Fresnel,
    }
}

/// Exact element distance `r_m` for the given direction and range.
pub fn element_distance(geom: &ArrayGeometry, m_y: i64, m_z: i64, u: f64, v: f64, r: f64) -> f64 {
    let p = geom.linear_path(m_y, m_z, u, v);
    let rho2 = geom.spacing() * geom.spacing() * ((m_y * m_y + m_z * m_z) as f64);
    (r * r + 2.0 * r * p + rho2).sqrt()
}

/// Spherical-wavefront steering vector, `exp(-j k (r_m - r))`.
pub fn steering_exact(geom: &ArrayGeometry, u: f64, v: f64, r: f64) -> Result<SteeringVector> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveRange(r));
    }
    let k = geom.wavenumber();
    let entries = geom
        .elements()
        .map(|(_, m_y, m_z)| {
            let p = geom.linear_path(m_y, m_z, u, v);
            let rho2 = geom.spacing() * geom.spacing() * ((m_y * m_y + m_z * m_z) as f64);
            let r_m = (r * r + 2.0 * r * p + rho2).sqrt();
            // r_m - r without cancellation
            let delta = (2.0 * r * p + rho2) / (r_m + r);
            Complex64::from_polar(1.0, -k * delta)
        })
        .collect();
    Ok(SteeringVector {
        entries,
        model: ChannelModel::Exact,
    })
}

pub fn steering(
    geom: &ArrayGeometry,
    u: f64,
    v: f64,
    r: f64,
    model: ChannelModel,
) -> Result<SteeringVector> {
    match model {
        ChannelModel::Fresnel => {
            if !(r > 0.0) {
                return Err(Error::NonPositiveRange(r));
            }
            Ok(steering_fresnel(geom, u, v, r))
        }
        ChannelModel::Exact => steering_exact(geom, u, v, r),
    }
}

/// Line-of-sight channel `h = beta * b(u, v, r)`.
pub fn synthesize_channel(
    geom: &ArrayGeometry,
    src: &SourceTruth,
    model: ChannelModel,
) -> Result<Array1<Complex64>> {
    let b = steering(geom, src.u, src.v, src.range, model)?;
    Ok(b.entries.mapv_into(|x| x * src.gain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wrap(x: f64) -> f64 {
        (x + PI).rem_euclid(2.0 * PI) - PI
    }

    #[test]
    fn index_examples() {
        let g = ArrayGeometry::reference_41x41();
        assert_eq!(g.antenna_index(0, 0).unwrap(), 840);
        assert_eq!(g.antenna_index(-20, -20).unwrap(), 0);
        assert_eq!(g.antenna_index(20, 20).unwrap(), 1680);
        assert!(matches!(
            g.antenna_index(21, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(g.antenna_coords(1681).is_err());
    }

    #[test]
    fn even_counts_rejected() {
        assert!(ArrayGeometry::new(4, 5, 0.1, 0.4).is_err());
        assert!(ArrayGeometry::new(5, 5, 0.1, 0.0).is_err());
        assert!(ArrayGeometry::new(5, 5, 0.0, 0.4).is_err());
    }

    #[test]
    fn rayleigh_examples() {
        let d = 256.0 * (0.03 / 4.0);
        assert!((rayleigh_distance(d, 0.03).unwrap() - 245.76).abs() < 1e-9);
        assert_eq!(rayleigh_distance(0.0, 0.03).unwrap(), 0.0);
        assert_eq!(rayleigh_distance(1.0, 2.0).unwrap(), 1.0);
        assert!(rayleigh_distance(1.0, 0.0).is_err());
    }

    #[test]
    fn boresight_fresnel_phase_is_quadratic() {
        let g = ArrayGeometry::quarter_wavelength(7, 9, 0.03).unwrap();
        let r = 2.5;
        let b = steering_fresnel(&g, 0.0, 0.0, r);
        let d = g.spacing();
        for (m, m_y, m_z) in g.elements() {
            let expect = -(PI * d * d / (g.wavelength() * r)) * ((m_y * m_y + m_z * m_z) as f64);
            assert!(wrap(b.entries[m].arg() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn center_entry_is_one() {
        let g = ArrayGeometry::reference_41x41();
        for &(u, v, r) in &[(0.3, -0.2, 4.0), (0.9, 0.1, 3.0), (-0.5, 0.5, 17.0)] {
            let c = g.center_index();
            assert_eq!(steering_fresnel(&g, u, v, r).entries[c], Complex64::new(1.0, 0.0));
            assert_eq!(
                steering_exact(&g, u, v, r).unwrap().entries[c],
                Complex64::new(1.0, 0.0)
            );
        }
    }

    #[test]
    fn exact_distance_pythagoras() {
        let g = ArrayGeometry::new(9, 9, 0.0075, 0.03).unwrap();
        let r_m = element_distance(&g, 3, 4, 0.0, 0.0, 5.0);
        assert!((r_m - (25.0f64 + 25.0 * 0.0075 * 0.0075).sqrt()).abs() < 1e-15);
        assert!(steering_exact(&g, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn exact_distance_matches_euclidean_placement() {
        // independent 3D placement: element at (0, m_y d, -m_z d), user at r (w, v, u)
        let g = ArrayGeometry::reference_41x41();
        let d = g.spacing();
        for &(u, v, r) in &[(0.5, 0.5, 3.0), (-0.7, 0.2, 8.0), (0.0, -0.95, 4.2)] {
            let w = (1.0f64 - u * u - v * v).sqrt();
            let user = [r * w, r * v, r * u];
            for (_, m_y, m_z) in g.elements() {
                let ant = [0.0, m_y as f64 * d, -(m_z as f64) * d];
                let euclid = ((user[0] - ant[0]).powi(2)
                    + (user[1] - ant[1]).powi(2)
                    + (user[2] - ant[2]).powi(2))
                .sqrt();
                let formula = element_distance(&g, m_y, m_z, u, v, r);
                assert!((euclid - formula).abs() < 1e-12, "{euclid} vs {formula}");
            }
        }
    }

    fn max_phase_error(g: &ArrayGeometry, u: f64, v: f64, r: f64) -> f64 {
        let f = steering_fresnel(g, u, v, r);
        let e = steering_exact(g, u, v, r).unwrap();
        f.entries
            .iter()
            .zip(e.entries.iter())
            .map(|(a, b)| (a * b.conj()).arg().abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn fresnel_phase_error_at_three_meters() {
        let g = ArrayGeometry::reference_41x41();
        let err = max_phase_error(&g, 0.5, 0.5, 3.0);
        // independent numpy evaluation: 0.040765006
        assert!((err - 0.040_765_006).abs() < 1e-8, "max phase error {err}");
    }

    #[test]
    fn fresnel_error_decreases_with_range() {
        let g = ArrayGeometry::quarter_wavelength(21, 21, 0.03).unwrap();
        for &(u, v) in &[(0.0, 0.0), (0.5, 0.5), (-0.3, 0.6), (0.8, -0.1)] {
            let errs: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
                .iter()
                .map(|&r| max_phase_error(&g, u, v, r))
                .collect();
            assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        }
    }

    #[test]
    fn synthesize_scales_by_gain() {
        let g = ArrayGeometry::quarter_wavelength(9, 11, 0.03).unwrap();
        let zero = SourceTruth::new(0.2, 0.1, 4.0, Complex64::new(0.0, 0.0)).unwrap();
        let h = synthesize_channel(&g, &zero, ChannelModel::Fresnel).unwrap();
        assert!(h.iter().all(|x| *x == Complex64::new(0.0, 0.0)));

        let beta = Complex64::new(0.6, -1.3);
        let src = SourceTruth::new(-0.4, 0.7, 5.0, beta).unwrap();
        for model in [ChannelModel::Exact, ChannelModel::Fresnel] {
            let h = synthesize_channel(&g, &src, model).unwrap();
            let energy: f64 = h.iter().map(|x| x.norm_sqr()).sum();
            let expect = beta.norm_sqr() * g.element_count() as f64;
            assert!((energy - expect).abs() < 1e-10 * expect);
        }
    }

    #[test]
    fn fresnel_vs_exact_at_rayleigh_distance() {
        // r_Rayl of the diagonal is 12 m; numpy gives 6.1738839e-4 relative.
        let g = ArrayGeometry::reference_41x41();
        let diag = (g.aperture_y().powi(2) + g.aperture_z().powi(2)).sqrt();
        let r = rayleigh_distance(diag, g.wavelength()).unwrap();
        let src = SourceTruth::new(0.5, 0.5, r, Complex64::new(1.0, 0.0)).unwrap();
        let hf = synthesize_channel(&g, &src, ChannelModel::Fresnel).unwrap();
        let he = synthesize_channel(&g, &src, ChannelModel::Exact).unwrap();
        let diff: f64 = (&hf - &he).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = he.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let rel = diff / norm;
        assert!((r - 12.0).abs() < 1e-12);
        assert!((rel - FRESNEL_RAYLEIGH_REL_DIFF_PIN).abs() < 1e-10, "relative difference {rel}");
    }

    const FRESNEL_RAYLEIGH_REL_DIFF_PIN: f64 = 6.173_883_9e-4;

    #[test]
    fn source_validation() {
        assert!(SourceTruth::new(0.8, 0.8, 1.0, Complex64::new(1.0, 0.0)).is_err());
        assert!(SourceTruth::new(0.1, 0.1, 0.0, Complex64::new(1.0, 0.0)).is_err());
        let s = SourceTruth::from_angles(0.3, 0.2, 5.0, Complex64::new(1.0, 0.0)).unwrap();
        assert!((s.u - 0.3f64.sin()).abs() < 1e-15);
        assert!(s.check_floor(6.0).is_err());
        assert!(s.check_floor(5.0).is_ok());
    }

    proptest! {
        #[test]
        fn index_roundtrip(hy in 0usize..12, hz in 0usize..12, pick in 0usize..10_000) {
            let g = ArrayGeometry::new(2 * hy + 1, 2 * hz + 1, 0.01, 0.04).unwrap();
            let m = pick % g.element_count();
            let (m_y, m_z) = g.antenna_coords(m).unwrap();
            prop_assert_eq!(g.antenna_index(m_y, m_z).unwrap(), m);
        }

        #[test]
        fn steering_is_unit_modulus(u in -0.7f64..0.7, v in -0.7f64..0.7, r in 0.5f64..50.0) {
            let g = ArrayGeometry::quarter_wavelength(9, 7, 0.03).unwrap();
            for b in [steering_fresnel(&g, u, v, r), steering_exact(&g, u, v, r).unwrap()] {
                for x in b.entries.iter() {
                    prop_assert!((x.norm() - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn conjugate_mirror_symmetry(u in -0.7f64..0.7, v in -0.7f64..0.7, r in 0.5f64..50.0) {
            let g = ArrayGeometry::quarter_wavelength(9, 11, 0.03).unwrap();
            let b = steering_fresnel(&g, u, v, r);
            let m_total = g.element_count();
            for (m, m_y, m_z) in g.elements() {
                let prod = b.entries[m] * b.entries[m_total - 1 - m].conj();
                let expect = -2.0 * g.wavenumber() * g.linear_path(m_y, m_z, u, v);
                prop_assert!((prod - Complex64::from_polar(1.0, expect)).norm() < 1e-12);
            }
        }
    }
}
