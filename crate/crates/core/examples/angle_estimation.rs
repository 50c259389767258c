//! Angle stage on its own: anti-diagonal DFT peak, then the rotation search.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sadce::prelude::*;

fn main() -> sadce::Result<()> {
    let geom = ArrayGeometry::reference_41x41();
    let src = SourceTruth::new(0.3137, -0.2071, 6.5, Complex64::from_polar(1.0, 0.7))?;
    let h = synthesize_channel(&geom, &src, ChannelModel::Fresnel)?;
    let pilots = generate_pilots(4, 1.0, PilotKind::AllOnes, 0)?;
    let noise = noise_power_for_snr(10.0, 1.0);
    let block = transmit(&h, &pilots, noise, &mut ChaCha8Rng::seed_from_u64(11))?;
    let cov = ls_channel_estimate(&block)?;

    for g in [2, 8, 32, 128] {
        let grid = RotationGrid::new(g, g)?;
        let est = estimate_angles(&cov, &geom, &grid)?;
        println!(
            "G = {g:>2}: peak (i_y, i_z) = ({}, {}), coarse (u, v) = ({:+.5}, {:+.5}), \
             refined = ({:+.6}, {:+.6}), |du| = {:.2e}, |dv| = {:.2e}, {} rotations",
            est.spectrum.peak_iy,
            est.spectrum.peak_iz,
            est.initial_u,
            est.initial_v,
            est.u,
            est.v,
            (est.u - src.u).abs(),
            (est.v - src.v).abs(),
            est.spectrum.evaluations
        );
    }
    Ok(())
}
