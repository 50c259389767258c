//! World-to-array coordinate conversion and user sampling.

use num_complex::Complex64;
use rand::Rng;

use super::config::ExperimentConfig;
use crate::array::SourceTruth;
use crate::error::{Error, Result};
use crate::signal::complex_gaussian;

const MAX_RESAMPLES: usize = 1000;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: [f64; 3]) -> Option<[f64; 3]> {
    let n = dot(a, a).sqrt();
    (n > 1e-12).then(|| a.map(|x| x / n))
}

/// Array frame in world coordinates: `normal` is the boresight, `axis_y` and
/// `axis_z` span the aperture. Element `(m_y, m_z)` sits at
/// `origin + m_y d axis_y - m_z d axis_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayFrame {
    pub origin: [f64; 3],
    pub normal: [f64; 3],
    pub axis_y: [f64; 3],
    pub axis_z: [f64; 3],
}

impl ArrayFrame {
    /// The aperture `y` axis is world `y` projected off the normal, or world
    /// `z` when the normal is along world `y`. `axis_z = normal x axis_y`.
    pub fn new(origin: [f64; 3], normal: [f64; 3]) -> Result<Self> {
        let n = normalize(normal).ok_or_else(|| Error::Config("boresight must be nonzero".into()))?;
        let project = |e: [f64; 3]| {
            let c = dot(e, n);
            normalize([e[0] - c * n[0], e[1] - c * n[1], e[2] - c * n[2]])
        };
        let axis_y = project([0.0, 1.0, 0.0])
            .or_else(|| project([0.0, 0.0, 1.0]))
            .expect("two independent axes cannot both be parallel to the normal");
        Ok(Self {
            origin,
            normal: n,
            axis_y,
            axis_z: cross(n, axis_y),
        })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let normal = match cfg.boresight {
            Some(n) => n,
            None => {
                let c = cfg.user_region.centroid();
                let b = cfg.bs_position;
                [c[0] - b[0], c[1] - b[1], c[2] - b[2]]
            }
        };
        Self::new(cfg.bs_position, normal)
    }

    /// `(u, v, r)` of a world point.
    pub fn to_array(&self, p: [f64; 3]) -> Result<(f64, f64, f64)> {
        let o = [p[0] - self.origin[0], p[1] - self.origin[1], p[2] - self.origin[2]];
        let r = dot(o, o).sqrt();
        if !(r > 0.0) {
            return Err(Error::InvalidSource("user coincides with the array center".into()));
        }
        Ok((dot(o, self.axis_z) / r, dot(o, self.axis_y) / r, r))
    }

    /// World position of element `(m_y, m_z)`.
    pub fn element_position(&self, m_y: i64, m_z: i64, spacing: f64) -> [f64; 3] {
        std::array::from_fn(|i| {
            self.origin[i] + m_y as f64 * spacing * self.axis_y[i] - m_z as f64 * spacing * self.axis_z[i]
        })
    }
}

/// Uniform point in the user box.
pub fn sample_position<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> [f64; 3] {
    let b = &cfg.user_region;
    std::array::from_fn(|i| {
        if b.max[i] > b.min[i] {
            rng.random_range(b.min[i]..=b.max[i])
        } else {
            b.min[i]
        }
    })
}

/// Draws a user position in the box and a `CN(0, 1)` gain.
pub fn sample_source<R: Rng + ?Sized>(cfg: &ExperimentConfig, frame: &ArrayFrame, rng: &mut R) -> Result<SourceTruth> {
    let floor = cfg.floor()?;
    for _ in 0..MAX_RESAMPLES {
        let p = sample_position(cfg, rng);
        let (u, v, r) = frame.to_array(p)?;
        if r < floor || u * u + v * v > 1.0 {
            continue;
        }
        let gain: Complex64 = complex_gaussian(rng, 1.0);
        return SourceTruth::new(u, v, r, gain);
    }
    Err(Error::Config(format!(
        "no user position satisfying r >= {floor} m after {MAX_RESAMPLES} draws"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ArrayGeometry;
    use crate::harness::config::{GeometryConfig, PilotLengths, RegionConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(min: [f64; 3], max: [f64; 3], bs: [f64; 3]) -> ExperimentConfig {
        ExperimentConfig {
            geometry: GeometryConfig {
                m_y: 9,
                m_z: 9,
                wavelength: 0.03,
                spacing: None,
            },
            user_region: RegionConfig { min, max },
            bs_position: bs,
            boresight: None,
            snr_grid: vec![0.0],
            pilot_length: PilotLengths::One(1),
            pilot_kind: Default::default(),
            pilot_power: 1.0,
            trials: 1,
            rng_seed: 0,
            model: Default::default(),
            methods: vec![crate::harness::config::Method::Sadce],
            rotation_grid: Default::default(),
            solver: Default::default(),
            fresnel_floor: None,
            music_grid: None,
            record_timing: true,
        }
    }

    #[test]
    fn degenerate_box_on_boresight() {
        let c = cfg([0.0, 0.0, -4.0], [0.0, 0.0, -4.0], [0.0; 3]);
        let frame = ArrayFrame::from_config(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_source(&c, &frame, &mut rng).unwrap();
        assert!(s.u.abs() < 1e-15 && s.v.abs() < 1e-15);
        assert!((s.range - 4.0).abs() < 1e-15);
    }

    #[test]
    fn frame_is_orthonormal_and_matches_element_geometry() {
        let frame = ArrayFrame::new([1.0, 2.0, 3.0], [0.3, -0.2, -1.0]).unwrap();
        let (n, y, z) = (frame.normal, frame.axis_y, frame.axis_z);
        for (a, b) in [(n, y), (n, z), (y, z)] {
            assert!(dot(a, b).abs() < 1e-15);
        }
        for a in [n, y, z] {
            assert!((dot(a, a) - 1.0).abs() < 1e-15);
        }
        // world distance to an element equals the array-frame exact distance
        let g = ArrayGeometry::quarter_wavelength(9, 9, 0.03).unwrap();
        let p = [1.7, 1.1, -1.5];
        let (u, v, r) = frame.to_array(p).unwrap();
        for &(my, mz) in &[(0, 0), (4, -3), (-2, 4)] {
            let e = frame.element_position(my, mz, g.spacing());
            let world = (0..3).map(|i| (p[i] - e[i]).powi(2)).sum::<f64>().sqrt();
            let model = crate::array::element_distance(&g, my, mz, u, v, r);
            assert!((world - model).abs() < 1e-12, "{world} vs {model}");
        }
    }

    #[test]
    fn normal_along_world_y() {
        let frame = ArrayFrame::new([0.0; 3], [0.0, 2.0, 0.0]).unwrap();
        assert_eq!(frame.axis_y, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn ranges_within_corner_bounds() {
        let c = cfg([-1.0, -1.5, 0.0], [2.0, 1.5, 1.0], [0.5, 0.0, 6.0]);
        let frame = ArrayFrame::from_config(&c).unwrap();
        let (lo, hi) = (c.user_region.min_distance(c.bs_position), c.user_region.max_distance(c.bs_position));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let s = sample_source(&c, &frame, &mut rng).unwrap();
            assert!(s.range >= lo - 1e-12 && s.range <= hi + 1e-12);
        }
    }

    #[test]
    fn mean_position_near_center() {
        let c = cfg([-1.2, -2.5, 5.0], [3.8, 2.5, 5.0], [1.3, 0.0, 10.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut acc = [0.0; 3];
        for _ in 0..n {
            let p = sample_position(&c, &mut rng);
            for i in 0..3 {
                acc[i] += p[i] / n as f64;
            }
        }
        // 1% of the box size per axis
        assert!((acc[0] - 1.3).abs() < 0.05);
        assert!(acc[1].abs() < 0.05);
        assert!((acc[2] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn unreachable_floor_is_config_error() {
        let mut c = cfg([0.0, 0.0, -4.0], [0.0, 0.0, -4.0], [0.0; 3]);
        c.fresnel_floor = Some(5.0);
        let frame = ArrayFrame::from_config(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_source(&c, &frame, &mut rng), Err(Error::Config(_))));
    }
}
