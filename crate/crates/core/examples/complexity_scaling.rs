//! Runtime of one estimate as the array grows.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sadce::prelude::*;

fn main() -> sadce::Result<()> {
    let pilots = generate_pilots(1, 1.0, PilotKind::AllOnes, 0)?;
    println!("{:>6} {:>8} {:>12}", "side", "M", "time [ms]");
    for side in [9, 21, 41, 81, 161] {
        let geom = ArrayGeometry::quarter_wavelength(side, side, 0.03)?;
        // principal phases wrap once max |f| / r reaches pi
        let floor = geom.default_fresnel_floor().max(1.05 * geom.max_focus_phase() / std::f64::consts::PI);
        let src = SourceTruth::new(0.2, -0.1, 2.0 * floor, Complex64::new(1.0, 0.0))?;
        let h = synthesize_channel(&geom, &src, ChannelModel::Fresnel)?;
        let block = transmit(&h, &pilots, noise_power_for_snr(20.0, 1.0), &mut ChaCha8Rng::seed_from_u64(1))?;
        let est = Sadce::builder(geom.clone(), RotationGrid::default(), FocusSolver::Analytic, floor)?;
        est.estimate(&block)?;
        let reps = 5;
        let t0 = Instant::now();
        for _ in 0..reps {
            est.estimate(&block)?;
        }
        let ms = t0.elapsed().as_secs_f64() * 1e3 / reps as f64;
        println!("{side:>6} {:>8} {ms:>12.2}", geom.element_count());
    }
    Ok(())
}
