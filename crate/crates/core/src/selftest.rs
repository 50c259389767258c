//! Quick oracle checks runnable from the command line.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::angle::dft2;
use crate::array::{steering_exact, steering_fresnel, synthesize_channel, ArrayGeometry, ChannelModel, SourceTruth};
use crate::baselines::{music3d_objective, oracle_distance_grid};
use crate::distance::{f_vector, fit_distance, solve_t_analytic, solve_t_dense};
use crate::estimator::{nmse_db, Sadce};
use crate::signal::{generate_pilots, transmit, PilotKind};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn naive_dft(x: &Array2<Complex64>) -> Array2<Complex64> {
    let (ny, nz) = x.dim();
    let mut out = Array2::zeros((ny, nz));
    for ((p, q), o) in out.indexed_iter_mut() {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((a, b), v) in x.indexed_iter() {
            let ph = -2.0 * PI * ((a * p) as f64 / ny as f64 + (b * q) as f64 / nz as f64);
            acc += v * Complex64::from_polar(1.0, ph);
        }
        *o = acc / (ny * nz) as f64;
    }
    out
}

pub fn run_all(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ArrayGeometry::reference_41x41();
    let mut out = Vec::new();

    let idx = [(0, 0), (-20, -20), (20, 20)].map(|(y, z)| g.antenna_index(y, z).ok());
    out.push(check(
        "antenna_index",
        idx == [Some(840), Some(0), Some(1680)],
        format!("{idx:?}"),
    ));

    let x = Array2::from_shape_fn((41, 41), |_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let err = (&dft2(&x) - &naive_dft(&x)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    out.push(check("dft2_vs_naive", err <= 1e-9, format!("max abs error {err:.3e}")));

    let f = steering_fresnel(&g, 0.5, 0.5, 3.0).entries;
    let e = steering_exact(&g, 0.5, 0.5, 3.0).map(|s| s.entries);
    let phase = e
        .map(|e| f.iter().zip(e.iter()).map(|(a, b)| (a * b.conj()).arg().abs()).fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    out.push(check("fresnel_phase_error", phase < 0.2, format!("max phase error {phase:.4} rad at r = 3 m")));

    let src = SourceTruth::new(8.0 / 41.0, -4.0 / 41.0, 5.0, Complex64::new(0.6, -0.8)).expect("valid source");
    let h = synthesize_channel(&g, &src, ChannelModel::Fresnel).expect("synthesis");
    let pilots = generate_pilots(1, 1.0, PilotKind::AllOnes, seed).expect("pilots");
    let block = transmit(&h, &pilots, 0.0, &mut rng).expect("transmit");
    let detail = match Sadce::new(g.clone()).and_then(|s| s.estimate(&block)) {
        Ok(est) => {
            let n = nmse_db(&est.h_hat, &h);
            let ok = (est.u_hat - src.u).abs() <= 1e-9
                && (est.v_hat - src.v).abs() <= 1e-9
                && (est.r_hat - src.range).abs() <= 1e-6 * src.range
                && n <= -100.0;
            (ok, format!("r_hat {:.9} m, nmse {n:.1} dB", est.r_hat))
        }
        Err(e) => (false, e.to_string()),
    };
    out.push(check("noiseless_pipeline", detail.0, detail.1));

    let small = ArrayGeometry::quarter_wavelength(9, 9, 0.03).expect("9 x 9");
    let hs: ndarray::Array1<Complex64> =
        (0..81).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let gaps: Vec<f64> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|&eps| {
            let a = solve_t_analytic(&hs, 0.1, 0.2, &small).expect("analytic");
            let d = solve_t_dense(&hs, 0.1, 0.2, &small, eps).expect("dense");
            let num: f64 = a.t_hat.iter().zip(d.t_hat.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
            let den: f64 = a.t_hat.iter().map(|x| x.norm_sqr()).sum();
            (num / den).sqrt()
        })
        .collect();
    out.push(check(
        "dense_limit_monotone",
        gaps[0] > gaps[1] && gaps[1] > gaps[2],
        format!("relative gaps {:.3e} {:.3e} {:.3e}", gaps[0], gaps[1], gaps[2]),
    ));

    let hm = synthesize_channel(&small, &SourceTruth::new(0.3, -0.2, 1.0, Complex64::new(1.0, 0.0)).expect("src"), ChannelModel::Fresnel)
        .expect("synthesis");
    let obj = music3d_objective(&hm, 0.3, -0.2, 1.0, &small).unwrap_or(f64::NAN);
    out.push(check("music_zero_at_truth", obj.abs() <= 1e-9, format!("objective {obj:.3e}")));

    let fv = f_vector(0.2, 0.1, &g);
    let t = fv.mapv(|x| Complex64::from_polar(1.0, x / 5.0 + 0.3));
    let fit = fit_distance(&t, &fv).map(|f| f.r_hat).unwrap_or(f64::NAN);
    let grid = oracle_distance_grid(&t, &fv, 1.0, 20.0, 1e-3).unwrap_or(f64::NAN);
    out.push(check(
        "distance_fit_vs_grid",
        (fit - grid).abs() <= 2e-3,
        format!("fit {fit:.6} m, grid {grid:.3} m"),
    ));
    out
}
