//! Pilot generation, the AWGN uplink observation and the LS channel estimate.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PilotKind {
    /// Every symbol equals `sqrt(P)`.
    #[default]
    AllOnes,
    /// Uniformly random QPSK symbols scaled to power `P`.
    Qpsk,
}

impl std::str::FromStr for PilotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all_ones" => Ok(PilotKind::AllOnes),
            "qpsk" => Ok(PilotKind::Qpsk),
            other => Err(Error::Config(format!("unknown pilot kind '{other}'"))),
        }
    }
}

/// Known uplink training symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSequence {
    pub symbols: Array1<Complex64>,
    pub power: f64,
}

impl PilotSequence {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// `s^H s`
    pub fn energy(&self) -> f64 {
        self.symbols.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// Builds `length` unit-modulus pilots scaled by `sqrt(power)`.
pub fn generate_pilots(length: usize, power: f64, kind: PilotKind, seed: u64) -> Result<PilotSequence> {
    if length == 0 {
        return Err(Error::EmptyPilots);
    }
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::NonPositivePilotPower(power));
    }
    let amp = power.sqrt();
    let symbols = match kind {
        PilotKind::AllOnes => Array1::from_elem(length, Complex64::new(amp, 0.0)),
        PilotKind::Qpsk => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = amp * std::f64::consts::FRAC_1_SQRT_2;
            (0..length)
                .map(|_| {
                    let re = if rng.random::<bool>() { a } else { -a };
                    let im = if rng.random::<bool>() { a } else { -a };
                    Complex64::new(re, im)
                })
                .collect()
        }
    };
    Ok(PilotSequence { symbols, power })
}

/// Noise power for a given SNR in dB, `sigma^2 = P 10^(-snr/10)`.
pub fn noise_power_for_snr(snr_db: f64, pilot_power: f64) -> f64 {
    pilot_power * 10f64.powf(-snr_db / 10.0)
}

/// Received pilots `Y = h s^T + Z` at the base station.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    /// `M x L` observations, one column per pilot.
    pub observations: Array2<Complex64>,
    pub noise_power: f64,
    pub pilots: PilotSequence,
}

impl ReceivedBlock {
    pub fn new(observations: Array2<Complex64>, noise_power: f64, pilots: PilotSequence) -> Result<Self> {
        if observations.ncols() != pilots.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} observation columns for {} pilots",
                observations.ncols(),
                pilots.len()
            )));
        }
        Ok(Self {
            observations,
            noise_power,
            pilots,
        })
    }

    pub fn element_count(&self) -> usize {
        self.observations.nrows()
    }
}

/// Draws one circularly-symmetric complex Gaussian sample with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Passes the channel `h` through the pilot transmission with AWGN of power
/// `noise_power` per element.
pub fn transmit<R: Rng + ?Sized>(
    h: &Array1<Complex64>,
    pilots: &PilotSequence,
    noise_power: f64,
    rng: &mut R,
) -> Result<ReceivedBlock> {
    if !(noise_power >= 0.0) {
        return Err(Error::DimensionMismatch(format!(
            "noise power must be non-negative, got {noise_power}"
        )));
    }
    let (m, l) = (h.len(), pilots.len());
    let mut y = Array2::zeros((m, l));
    // column-major draw order keeps the noise stream independent of M for a given column
    for (col, s) in pilots.symbols.iter().enumerate() {
        for row in 0..m {
            let z = if noise_power > 0.0 {
                complex_gaussian(rng, noise_power)
            } else {
                Complex64::new(0.0, 0.0)
            };
            y[[row, col]] = h[row] * s + z;
        }
    }
    ReceivedBlock::new(y, noise_power, pilots.clone())
}

/// Rank-one covariance estimate represented by the LS channel vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub ls_channel: Array1<Complex64>,
}

impl CovarianceEstimate {
    pub fn len(&self) -> usize {
        self.ls_channel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ls_channel.is_empty()
    }

    /// `[R]_{i,j} = h_i conj(h_j)` without materializing the matrix.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.ls_channel[i] * self.ls_channel[j].conj()
    }

    /// Dense `M x M` outer product. Only used by desk-scale checks.
    pub fn dense(&self, limit: usize) -> Result<Array2<Complex64>> {
        let m = self.len();
        if m > limit {
            return Err(Error::DenseSizeExceeded { m, limit });
        }
        Ok(Array2::from_shape_fn((m, m), |(i, j)| self.entry(i, j)))
    }
}

/// LS estimate `h = Y s^* (s^H s)^{-1}`.
pub fn ls_channel_estimate(block: &ReceivedBlock) -> Result<CovarianceEstimate> {
    let energy = block.pilots.energy();
    if !(energy > 0.0) {
        return Err(Error::ZeroPilotEnergy);
    }
    let conj: Array1<Complex64> = block.pilots.symbols.mapv(|s| s.conj());
    let mut h = block.observations.dot(&conj);
    h.mapv_inplace(|x| x / energy);
    Ok(CovarianceEstimate { ls_channel: h })
}
