//! Exhaustive 3D MUSIC search on a small array next to the sequential estimator.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sadce::prelude::*;

fn main() -> sadce::Result<()> {
    let geom = ArrayGeometry::quarter_wavelength(9, 9, 0.03)?;
    let src = SourceTruth::new(0.27, -0.18, 0.9, Complex64::new(0.6, 0.8))?;
    let h = synthesize_channel(&geom, &src, ChannelModel::Fresnel)?;
    let pilots = generate_pilots(2, 1.0, PilotKind::AllOnes, 0)?;
    let block = transmit(&h, &pilots, noise_power_for_snr(20.0, 1.0), &mut ChaCha8Rng::seed_from_u64(5))?;
    let h_ls = ls_channel_estimate(&block)?.ls_channel;

    let grid = GridSpec::full(161, 161, 0.3, 3.0, 271)?.with_physical_only(true);
    let t0 = Instant::now();
    let music = music3d_search(&h_ls, &grid, &geom)?;
    let t_music = t0.elapsed();

    let floor = 0.3;
    let sadce = Sadce::builder(geom.clone(), RotationGrid::default(), FocusSolver::Analytic, floor)?;
    let t0 = Instant::now();
    let est = sadce.estimate(&block)?;
    let t_sadce = t0.elapsed();

    println!("truth   u {:+.4} v {:+.4} r {:.4}", src.u, src.v, src.range);
    println!(
        "MUSIC   u {:+.4} v {:+.4} r {:.4}  ({} points, {:.1?})",
        music.u, music.v, music.r, music.evaluations, t_music
    );
    println!("SADCE   u {:+.4} v {:+.4} r {:.4}  ({:.1?})", est.u_hat, est.v_hat, est.r_hat, t_sadce);
    Ok(())
}
