//! Near-field channel estimation for uniform planar arrays.
//!
//! The estimator works in two stages. Mirror-symmetric products of the
//! least-squares channel estimate cancel the range term, so a 2D DFT plus a
//! phase-rotation search recovers the direction `(u, v)`. With the direction
//! fixed, the range-dependent phase profile is isolated in closed form and a
//! two-parameter least-squares fit yields `1/r`; a projection gives the gain.
//!
//! ```
//! use num_complex::Complex64;
//! use rand::SeedableRng;
//! use sadce::prelude::*;
//!
//! let geom = ArrayGeometry::quarter_wavelength(21, 21, 0.03).unwrap();
//! let user = SourceTruth::new(0.2, -0.1, 3.0, Complex64::new(0.7, 0.4)).unwrap();
//! let h = synthesize_channel(&geom, &user, ChannelModel::Fresnel).unwrap();
//! let pilots = generate_pilots(4, 1.0, PilotKind::AllOnes, 0).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let block = transmit(&h, &pilots, noise_power_for_snr(30.0, 1.0), &mut rng).unwrap();
//!
//! let est = Sadce::new(geom).unwrap().estimate(&block).unwrap();
//! assert!((est.u_hat - 0.2).abs() < 1e-2);
//! assert!((est.r_hat - 3.0).abs() < 0.5);
//! ```

pub mod angle;
pub mod array;
pub mod baselines;
pub mod distance;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod selftest;
pub mod signal;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::angle::{estimate_angles, RotationGrid};
    pub use crate::array::{
        steering, steering_exact, steering_fresnel, synthesize_channel, ArrayGeometry, ChannelModel, SourceTruth,
    };
    pub use crate::baselines::{music3d_search, GridSpec};
    pub use crate::distance::FocusSolver;
    pub use crate::error::{Error, Result};
    pub use crate::estimator::{nmse_db, ChannelEstimate, Sadce};
    pub use crate::signal::{
        generate_pilots, ls_channel_estimate, noise_power_for_snr, transmit, PilotKind, ReceivedBlock,
    };
}
