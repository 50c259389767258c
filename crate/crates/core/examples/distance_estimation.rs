//! Range stage given the angles: focus vector, phase template and the affine
//! least-squares fit, compared against a brute-force grid scan.

use num_complex::Complex64;
use sadce::array::{steering_fresnel, synthesize_channel, ArrayGeometry, ChannelModel, SourceTruth};
use sadce::baselines::oracle_distance_grid;
use sadce::distance::{f_vector, fit_distance, project_gain, FocusSolver};

fn main() -> sadce::Result<()> {
    let geom = ArrayGeometry::quarter_wavelength(15, 15, 0.03)?;
    let src = SourceTruth::new(-0.12, 0.4, 1.7, Complex64::new(0.3, -1.1))?;
    let h = synthesize_channel(&geom, &src, ChannelModel::Fresnel)?;
    let f = f_vector(src.u, src.v, &geom);

    for solver in [
        FocusSolver::Analytic,
        FocusSolver::Dense { ridge: 1e-3 },
        FocusSolver::Dense { ridge: 1e-6 },
    ] {
        let t = solver.solve(&h, src.u, src.v, &geom)?;
        let fit = fit_distance(&t.t_hat, &f)?;
        println!("{solver:?}: r_hat = {:.9} m, intercept {:+.3e}", fit.r_hat, fit.sigma_r);
    }

    let t = FocusSolver::Analytic.solve(&h, src.u, src.v, &geom)?;
    let r_grid = oracle_distance_grid(&t.t_hat, &f, 0.5, 5.0, 1e-4)?;
    println!("grid scan: r = {r_grid:.4} m");

    let fit = fit_distance(&t.t_hat, &f)?;
    let b = steering_fresnel(&geom, src.u, src.v, fit.r_hat).entries;
    let beta = project_gain(&h, &b)?;
    println!("gain: true {:.6}, estimated {:.6}", src.gain, beta);
    Ok(())
}
