//! Experiment configuration, read from TOML. Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::angle::RotationGrid;
use crate::array::{ArrayGeometry, ChannelModel};
use crate::baselines::GridSpec;
use crate::distance::FocusSolver;
use crate::error::{Error, Result};
use crate::signal::PilotKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sadce,
    Ls,
    Music3d,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sadce => "sadce",
            Method::Ls => "ls",
            Method::Music3d => "music3d",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sadce" => Ok(Method::Sadce),
            "ls" => Ok(Method::Ls),
            "music3d" | "music" => Ok(Method::Music3d),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub m_y: usize,
    pub m_z: usize,
    pub wavelength: f64,
    /// Defaults to a quarter wavelength.
    #[serde(default)]
    pub spacing: Option<f64>,
}

impl GeometryConfig {
    pub fn build(&self) -> Result<ArrayGeometry> {
        let d = self.spacing.unwrap_or(self.wavelength / 4.0);
        ArrayGeometry::new(self.m_y, self.m_z, d, self.wavelength)
    }
}

/// Axis-aligned box of user positions in world coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl RegionConfig {
    pub fn centroid(&self) -> [f64; 3] {
        std::array::from_fn(|i| 0.5 * (self.min[i] + self.max[i]))
    }

    pub fn corners(&self) -> [[f64; 3]; 8] {
        std::array::from_fn(|k| {
            std::array::from_fn(|i| if k >> i & 1 == 0 { self.min[i] } else { self.max[i] })
        })
    }

    /// Distance from `p` to the nearest point of the box.
    pub fn min_distance(&self, p: [f64; 3]) -> f64 {
        (0..3)
            .map(|i| {
                let c = p[i].clamp(self.min[i], self.max[i]);
                (p[i] - c).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_distance(&self, p: [f64; 3]) -> f64 {
        self.corners()
            .iter()
            .map(|c| (0..3).map(|i| (c[i] - p[i]).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// One pilot length or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PilotLengths {
    One(usize),
    Many(Vec<usize>),
}

impl PilotLengths {
    pub fn values(&self) -> Vec<usize> {
        match self {
            PilotLengths::One(l) => vec![*l],
            PilotLengths::Many(v) => v.clone(),
        }
    }
}

fn default_power() -> f64 {
    1.0
}

fn default_methods() -> Vec<Method> {
    vec![Method::Sadce, Method::Ls]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub user_region: RegionConfig,
    pub bs_position: [f64; 3],
    /// Array normal in world coordinates; defaults to pointing at the region centroid.
    #[serde(default)]
    pub boresight: Option<[f64; 3]>,
    pub snr_grid: Vec<f64>,
    pub pilot_length: PilotLengths,
    #[serde(default)]
    pub pilot_kind: PilotKind,
    #[serde(default = "default_power")]
    pub pilot_power: f64,
    pub trials: usize,
    pub rng_seed: u64,
    #[serde(default)]
    pub model: ChannelModel,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub rotation_grid: RotationGrid,
    #[serde(default)]
    pub solver: FocusSolver,
    /// Minimum user range in meters; defaults to ten times the largest aperture.
    #[serde(default)]
    pub fresnel_floor: Option<f64>,
    #[serde(default)]
    pub music_grid: Option<GridSpec>,
    /// When false, runtimes are reported as NaN so output is reproducible byte for byte.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn array(&self) -> Result<ArrayGeometry> {
        self.geometry.build()
    }

    pub fn floor(&self) -> Result<f64> {
        Ok(match self.fresnel_floor {
            Some(f) => f,
            None => self.array()?.default_fresnel_floor(),
        })
    }

    pub fn pilot_lengths(&self) -> Vec<usize> {
        self.pilot_length.values()
    }

    /// Default MUSIC grid: 201 x 201 over the full `u, v` square and 191 ranges spanning the region.
    pub fn music_grid_or_default(&self) -> Result<GridSpec> {
        if let Some(g) = self.music_grid {
            return Ok(g);
        }
        let lo = self.user_region.min_distance(self.bs_position);
        let hi = self.user_region.max_distance(self.bs_position);
        GridSpec::full(201, 201, lo.max(self.floor()?), hi.max(lo + 1e-3), 191)
    }

    pub fn validate(&self) -> Result<()> {
        let geom = self.array()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.snr_grid.is_empty() || self.snr_grid.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_grid must be a nonempty list of finite values".into()));
        }
        let lengths = self.pilot_lengths();
        if lengths.is_empty() || lengths.contains(&0) {
            return Err(Error::Config("pilot_length must be positive".into()));
        }
        if !(self.pilot_power > 0.0) {
            return Err(Error::Config("pilot_power must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::Config("methods contains duplicates".into()));
        }
        for i in 0..3 {
            if !(self.user_region.min[i] <= self.user_region.max[i]) {
                return Err(Error::Config(format!("user_region min exceeds max on axis {i}")));
            }
        }
        RotationGrid::new(self.rotation_grid.g_y, self.rotation_grid.g_z)?;
        if let Some(n) = self.boresight {
            if !(n.iter().map(|x| x * x).sum::<f64>() > 0.0) {
                return Err(Error::Config("boresight must be nonzero".into()));
            }
        }
        let floor = self.floor()?;
        if !(floor > 0.0) {
            return Err(Error::Config("fresnel_floor must be positive".into()));
        }
        let nearest = self.user_region.min_distance(self.bs_position);
        if nearest < floor {
            return Err(Error::Config(format!(
                "user region comes within {nearest:.3} m of the array, below the {floor:.3} m Fresnel floor"
            )));
        }
        let max_phase = geom.max_focus_phase() / floor;
        if max_phase >= std::f64::consts::PI {
            return Err(Error::PhaseWrap {
                max_phase,
                r_floor: floor,
            });
        }
        if let Some(g) = &self.music_grid {
            g.validate()?;
        }
        Ok(())
    }
}
