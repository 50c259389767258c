//! One noisy observation through the full estimator.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sadce::prelude::*;

fn main() -> sadce::Result<()> {
    let geom = ArrayGeometry::reference_41x41();
    let src = SourceTruth::new(0.21, 0.33, 7.2, Complex64::from_polar(1.0, -2.0))?;
    let h = synthesize_channel(&geom, &src, ChannelModel::Exact)?;
    let estimator = Sadce::new(geom.clone())?;

    println!("{:>6} {:>11} {:>11} {:>9} {:>10}", "SNR", "|du|", "|dv|", "|dr| [m]", "NMSE [dB]");
    for snr_db in [0.0, 10.0, 20.0, 30.0] {
        let pilots = generate_pilots(1, 1.0, PilotKind::AllOnes, 0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let block = transmit(&h, &pilots, noise_power_for_snr(snr_db, 1.0), &mut rng)?;
        let est = estimator.estimate(&block)?;
        let ls = ls_channel_estimate(&block)?;
        println!(
            "{snr_db:>6.1} {:>11.3e} {:>11.3e} {:>9.4} {:>10.2}   (LS {:.2} dB)",
            (est.u_hat - src.u).abs(),
            (est.v_hat - src.v).abs(),
            (est.r_hat - src.range).abs(),
            nmse_db(&est.h_hat, &h),
            nmse_db(&ls.ls_channel, &h)
        );
    }
    Ok(())
}
