//! Compare the exact spherical-wave steering vector with its second-order
//! Fresnel approximation as the user moves away from the array.

use sadce::array::{rayleigh_distance, steering_exact, steering_fresnel, ArrayGeometry};

fn main() -> sadce::Result<()> {
    let geom = ArrayGeometry::reference_41x41();
    let (u, v) = (0.25, -0.1);
    let floor = geom.default_fresnel_floor();
    let rayleigh = rayleigh_distance(geom.max_aperture(), geom.wavelength())?;
    println!(
        "{}x{} UPA, d = {} m, aperture {:.3} m, Fresnel floor {:.2} m, Rayleigh {:.1} m",
        geom.m_y_count(),
        geom.m_z_count(),
        geom.spacing(),
        geom.max_aperture(),
        floor,
        rayleigh
    );
    println!("{:>8} {:>14} {:>14}", "r [m]", "max phase err", "rel |b-b_F|");
    for r in [floor, 5.0, 10.0, 20.0, 50.0, rayleigh] {
        let exact = steering_exact(&geom, u, v, r)?.entries;
        let approx = steering_fresnel(&geom, u, v, r).entries;
        let phase = exact
            .iter()
            .zip(approx.iter())
            .map(|(a, b)| (a * b.conj()).arg().abs())
            .fold(0.0, f64::max);
        let diff: f64 = exact.iter().zip(approx.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let rel = (diff / exact.len() as f64).sqrt();
        println!("{r:>8.2} {phase:>14.3e} {rel:>14.3e}");
    }
    Ok(())
}
