//! Reference estimators used to cross-check the sequential pipeline.
//!
//! `music3d_search` scans a `(u, v, r)` grid with the rank-one MUSIC
//! denominator `M - |b^H h|^2 / |h|^2`. Along a `u` line the Fresnel phase is
//! quadratic in `u`, so consecutive steering vectors differ by a factor whose
//! own ratio is constant. Two complex multiplies per element replace a
//! `from_polar` per element.

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{steering_fresnel, ArrayGeometry};
use crate::distance::DENSE_LIMIT;
use crate::error::{Error, Result};

/// Largest number of grid points `music3d_search` accepts.
pub const MAX_GRID_POINTS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points }
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn linear(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.points < 2 {
            return Err(Error::InvalidGrid(format!("{name} axis needs at least 2 points")));
        }
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "{name} axis range [{}, {}] is empty",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeSpacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub u: Axis,
    pub v: Axis,
    pub r: Axis,
    #[serde(default)]
    pub r_spacing: RangeSpacing,
    /// Skip `(u, v)` pairs with `u^2 + v^2 > 1`.
    #[serde(default)]
    pub physical_only: bool,
}

impl GridSpec {
    pub fn new(u: Axis, v: Axis, r: Axis) -> Result<Self> {
        let spec = Self {
            u,
            v,
            r,
            r_spacing: RangeSpacing::Linear,
            physical_only: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Uniform grid over `u, v in [-1, 1]` and `r in [r_min, r_max]`.
    pub fn full(n_u: usize, n_v: usize, r_min: f64, r_max: f64, n_r: usize) -> Result<Self> {
        Self::new(Axis::new(-1.0, 1.0, n_u), Axis::new(-1.0, 1.0, n_v), Axis::new(r_min, r_max, n_r))
    }

    pub fn with_log_range(mut self) -> Self {
        self.r_spacing = RangeSpacing::Log;
        self
    }

    pub fn with_physical_only(mut self, on: bool) -> Self {
        self.physical_only = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.u.validate("u")?;
        self.v.validate("v")?;
        self.r.validate("r")?;
        for (name, a) in [("u", &self.u), ("v", &self.v)] {
            if a.min < -1.0 || a.max > 1.0 {
                return Err(Error::InvalidGrid(format!("{name} axis must lie within [-1, 1]")));
            }
        }
        if !(self.r.min > 0.0) {
            return Err(Error::InvalidGrid("range axis must be strictly positive".into()));
        }
        Ok(())
    }

    pub fn point_count(&self) -> u64 {
        self.u.points as u64 * self.v.points as u64 * self.r.points as u64
    }

    pub fn u_value(&self, i: usize) -> f64 {
        self.u.linear(i)
    }

    pub fn v_value(&self, i: usize) -> f64 {
        self.v.linear(i)
    }

    pub fn r_value(&self, i: usize) -> f64 {
        match self.r_spacing {
            RangeSpacing::Linear => self.r.linear(i),
            RangeSpacing::Log => {
                if i + 1 == self.r.points {
                    return self.r.max;
                }
                let t = i as f64 / (self.r.points - 1) as f64;
                self.r.min * (self.r.max / self.r.min).powf(t)
            }
        }
    }
}

/// `|b|^2 - |b^H h|^2 / |h|^2` for the Fresnel steering vector at `(u, v, r)`.
pub fn music3d_objective(h: &Array1<Complex64>, u: f64, v: f64, r: f64, geom: &ArrayGeometry) -> Result<f64> {
    if h.len() != geom.element_count() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} entries, array has {}",
            h.len(),
            geom.element_count()
        )));
    }
    let hh: f64 = h.iter().map(|x| x.norm_sqr()).sum();
    if !(hh > 0.0) {
        return Err(Error::DegenerateInput("channel estimate is zero"));
    }
    let b = steering_fresnel(geom, u, v, r).entries;
    let bh: Complex64 = b.iter().zip(h.iter()).map(|(bi, hi)| bi.conj() * hi).sum();
    Ok((geom.element_count() as f64 - bh.norm_sqr() / hh).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MusicEstimate {
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub objective: f64,
    /// Grid indices `(i_u, i_v, i_r)` of the minimizer.
    pub index: (usize, usize, usize),
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    index: (usize, usize, usize),
}

impl Best {
    const NONE: Best = Best {
        value: f64::INFINITY,
        index: (usize::MAX, usize::MAX, usize::MAX),
    };

    fn better(self, other: Best) -> Best {
        let tol = 1e-12 * self.value.abs().max(other.value.abs()).max(1.0);
        if (self.value - other.value).abs() <= tol {
            if other.index < self.index {
                other
            } else {
                self
            }
        } else if other.value < self.value {
            other
        } else {
            self
        }
    }
}

/// Exhaustive argmin of [`music3d_objective`] over `grid`. Ties resolve to the
/// lexicographically smallest `(i_u, i_v, i_r)`.
pub fn music3d_search(h: &Array1<Complex64>, grid: &GridSpec, geom: &ArrayGeometry) -> Result<MusicEstimate> {
    let m = geom.element_count();
    if m > DENSE_LIMIT {
        return Err(Error::DenseSizeExceeded { m, limit: DENSE_LIMIT });
    }
    if h.len() != m {
        return Err(Error::DimensionMismatch(format!("channel has {} entries, array has {m}", h.len())));
    }
    grid.validate()?;
    let points = grid.point_count();
    if points > MAX_GRID_POINTS {
        return Err(Error::GridTooLarge {
            points,
            limit: MAX_GRID_POINTS,
        });
    }
    let hh: f64 = h.iter().map(|x| x.norm_sqr()).sum();
    if !(hh > 0.0) {
        return Err(Error::DegenerateInput("channel estimate is zero"));
    }

    let k = geom.wavenumber();
    let d = geom.spacing();
    let coords: Vec<(f64, f64)> = geom.elements().map(|(_, y, z)| (y as f64, z as f64)).collect();
    let du = grid.u.step();

    let lines: Vec<(usize, usize)> = (0..grid.r.points)
        .flat_map(|ir| (0..grid.v.points).map(move |iv| (ir, iv)))
        .collect();

    let (best, evaluations) = lines
        .par_iter()
        .map(|&(ir, iv)| {
            let r = grid.r_value(ir);
            let v = grid.v_value(iv);
            let (lo, hi) = u_span(grid, v);
            if lo > hi {
                return (Best::NONE, 0u64);
            }
            let u0 = grid.u_value(lo);
            let c = d * d / (2.0 * r);
            // split real/imaginary storage so the inner loop vectorizes
            let mut lane = Lanes::with_capacity(m);
            for (i, &(my, mz)) in coords.iter().enumerate() {
                let x = mz * u0 - my * v;
                let rho = mz * mz + my * my;
                let dx = mz * du;
                lane.push(
                    Complex64::from_polar(1.0, -k * (d * x + c * (rho - x * x))),
                    Complex64::from_polar(1.0, -k * (d * dx - c * (2.0 * x * dx + dx * dx))),
                    Complex64::from_polar(1.0, 2.0 * k * c * dx * dx),
                    h[i],
                );
            }
            let mut best = Best::NONE;
            for iu in lo..=hi {
                let acc = lane.advance();
                let value = (m as f64 - acc / hh).max(0.0);
                best = best.better(Best {
                    value,
                    index: (iu, iv, ir),
                });
            }
            (best, (hi - lo + 1) as u64)
        })
        .reduce(|| (Best::NONE, 0), |a, b| (a.0.better(b.0), a.1 + b.1));

    if best.index.0 == usize::MAX {
        return Err(Error::InvalidGrid("no physical grid points".into()));
    }
    let (iu, iv, ir) = best.index;
    Ok(MusicEstimate {
        u: grid.u_value(iu),
        v: grid.v_value(iv),
        r: grid.r_value(ir),
        objective: best.value,
        index: best.index,
        evaluations,
    })
}

#[derive(Default)]
struct Lanes {
    b_re: Vec<f64>,
    b_im: Vec<f64>,
    s_re: Vec<f64>,
    s_im: Vec<f64>,
    c_re: Vec<f64>,
    c_im: Vec<f64>,
    h_re: Vec<f64>,
    h_im: Vec<f64>,
}

impl Lanes {
    fn with_capacity(m: usize) -> Self {
        let v = || Vec::with_capacity(m);
        Self {
            b_re: v(),
            b_im: v(),
            s_re: v(),
            s_im: v(),
            c_re: v(),
            c_im: v(),
            h_re: v(),
            h_im: v(),
        }
    }

    fn push(&mut self, b: Complex64, step: Complex64, curve: Complex64, h: Complex64) {
        self.b_re.push(b.re);
        self.b_im.push(b.im);
        self.s_re.push(step.re);
        self.s_im.push(step.im);
        self.c_re.push(curve.re);
        self.c_im.push(curve.im);
        self.h_re.push(h.re);
        self.h_im.push(h.im);
    }

    /// Returns `|b^H h|^2` at the current point and steps `b` to the next one.
    fn advance(&mut self) -> f64 {
        let n = self.b_re.len();
        let (mut acc_re, mut acc_im) = (0.0, 0.0);
        let (br, bi) = (&mut self.b_re[..n], &mut self.b_im[..n]);
        let (sr, si) = (&mut self.s_re[..n], &mut self.s_im[..n]);
        let (cr, ci) = (&self.c_re[..n], &self.c_im[..n]);
        let (hr, hi) = (&self.h_re[..n], &self.h_im[..n]);
        for i in 0..n {
            acc_re += br[i] * hr[i] + bi[i] * hi[i];
            acc_im += br[i] * hi[i] - bi[i] * hr[i];
            let nb_re = br[i] * sr[i] - bi[i] * si[i];
            let nb_im = br[i] * si[i] + bi[i] * sr[i];
            br[i] = nb_re;
            bi[i] = nb_im;
            let ns_re = sr[i] * cr[i] - si[i] * ci[i];
            let ns_im = sr[i] * ci[i] + si[i] * cr[i];
            sr[i] = ns_re;
            si[i] = ns_im;
        }
        acc_re * acc_re + acc_im * acc_im
    }
}

fn u_span(grid: &GridSpec, v: f64) -> (usize, usize) {
    let n = grid.u.points;
    if !grid.physical_only {
        return (0, n - 1);
    }
    let ok = |i: usize| {
        let u = grid.u_value(i);
        u * u + v * v <= 1.0 + 1e-12
    };
    match (0..n).position(ok) {
        None => (1, 0),
        Some(lo) => {
            let hi = (lo..n).rposition(ok).map(|p| p + lo).unwrap_or(lo);
            (lo, hi)
        }
    }
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Profiled phase misfit at range `r`: the common offset is removed with the
/// circular mean of the residuals before squaring.
pub fn oracle_distance_objective(t_hat: &Array1<Complex64>, f: &Array1<f64>, r: f64) -> f64 {
    let resid: Vec<f64> = t_hat
        .iter()
        .zip(f.iter())
        .map(|(t, fi)| wrap(t.arg() - fi / r))
        .collect();
    let mean: Complex64 = resid.iter().map(|&e| Complex64::from_polar(1.0, e)).sum();
    let sigma = mean.arg();
    resid.iter().map(|&e| wrap(e - sigma).powi(2)).sum()
}

/// Brute-force range search over `r_min, r_min + step, ..., r_max`.
pub fn oracle_distance_grid(
    t_hat: &Array1<Complex64>,
    f: &Array1<f64>,
    r_min: f64,
    r_max: f64,
    step: f64,
) -> Result<f64> {
    if t_hat.len() != f.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} focus entries for {} template entries",
            t_hat.len(),
            f.len()
        )));
    }
    if !(r_min > 0.0 && r_max >= r_min && step > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "range grid [{r_min}, {r_max}] step {step}"
        )));
    }
    let n = ((r_max - r_min) / step + 1e-9).floor() as usize;
    let mut best = (f64::INFINITY, r_min);
    for i in 0..=n {
        let r = r_min + i as f64 * step;
        let obj = oracle_distance_objective(t_hat, f, r);
        if obj < best.0 {
            best = (obj, r);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{synthesize_channel, ChannelModel, SourceTruth};
    use crate::distance::f_vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> ArrayGeometry {
        ArrayGeometry::quarter_wavelength(9, 9, 0.03).unwrap()
    }

    fn channel(g: &ArrayGeometry, u: f64, v: f64, r: f64) -> Array1<Complex64> {
        let src = SourceTruth::new(u, v, r, Complex64::new(0.6, 0.8)).unwrap();
        synthesize_channel(g, &src, ChannelModel::Fresnel).unwrap()
    }

    /// Point-wise evaluation with no recurrence.
    fn direct_search(h: &Array1<Complex64>, grid: &GridSpec, g: &ArrayGeometry) -> (usize, usize, usize) {
        let mut best = Best::NONE;
        for iu in 0..grid.u.points {
            for iv in 0..grid.v.points {
                for ir in 0..grid.r.points {
                    let value = music3d_objective(h, grid.u_value(iu), grid.v_value(iv), grid.r_value(ir), g).unwrap();
                    best = best.better(Best { value, index: (iu, iv, ir) });
                }
            }
        }
        best.index
    }

    #[test]
    fn objective_zero_at_truth_and_nonnegative() {
        let g = small();
        let h = channel(&g, 0.3, -0.2, 0.8);
        assert!(music3d_objective(&h, 0.3, -0.2, 0.8, &g).unwrap().abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (u, v, r) = (rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7), rng.random_range(0.2..5.0));
            assert!(music3d_objective(&h, u, v, r, &g).unwrap() >= 0.0);
        }
    }

    #[test]
    fn objective_scale_invariant() {
        let g = small();
        let h = channel(&g, 0.1, 0.4, 1.5);
        let s = h.mapv(|x| x * Complex64::new(-2.5, 0.7));
        for &(u, v, r) in &[(0.0, 0.0, 1.0), (0.2, 0.3, 2.0)] {
            let (a, b) = (music3d_objective(&h, u, v, r, &g).unwrap(), music3d_objective(&s, u, v, r, &g).unwrap());
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn truth_is_global_minimum_on_grid() {
        let g = small();
        let grid = GridSpec::new(Axis::new(-0.6, 0.6, 13), Axis::new(-0.6, 0.6, 13), Axis::new(0.5, 2.5, 11)).unwrap();
        let (u, v, r) = (grid.u_value(8), grid.v_value(3), grid.r_value(5));
        let h = channel(&g, u, v, r);
        let at_truth = music3d_objective(&h, u, v, r, &g).unwrap();
        for iu in 0..13 {
            for iv in 0..13 {
                for ir in 0..11 {
                    let o = music3d_objective(&h, grid.u_value(iu), grid.v_value(iv), grid.r_value(ir), &g).unwrap();
                    assert!(at_truth <= o + 1e-12);
                }
            }
        }
        let est = music3d_search(&h, &grid, &g).unwrap();
        assert_eq!(est.index, (8, 3, 5));
        assert_eq!((est.u, est.v, est.r), (u, v, r));
    }

    #[test]
    fn recurrence_matches_direct_evaluation() {
        let g = small();
        let grid = GridSpec::new(Axis::new(-1.0, 1.0, 41), Axis::new(-1.0, 1.0, 9), Axis::new(0.3, 3.0, 7)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3 {
            let h: Array1<Complex64> = (0..81).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let fast = music3d_search(&h, &grid, &g).unwrap();
            assert_eq!(fast.index, direct_search(&h, &grid, &g));
            let (iu, iv, ir) = fast.index;
            let direct = music3d_objective(&h, grid.u_value(iu), grid.v_value(iv), grid.r_value(ir), &g).unwrap();
            assert!((fast.objective - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn finer_grid_halves_quantization() {
        let g = small();
        let h = channel(&g, 0.237, -0.0, 1.0);
        let worst = |n: usize| {
            let grid = GridSpec::new(Axis::new(-0.5, 0.5, n), Axis::new(-0.5, 0.5, 3), Axis::new(1.0, 2.0, 2)).unwrap();
            let est = music3d_search(&h, &grid, &g).unwrap();
            ((est.u - 0.237).abs(), grid.u.step() / 2.0)
        };
        let (e1, b1) = worst(11);
        let (e2, b2) = worst(21);
        assert!(e1 <= b1 + 1e-12 && e2 <= b2 + 1e-12);
        assert!((b2 - b1 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn physical_only_skips_invisible_directions() {
        let g = small();
        let h = channel(&g, 0.0, 0.0, 1.0);
        let grid = GridSpec::full(21, 21, 0.5, 2.0, 4).unwrap();
        let all = music3d_search(&h, &grid, &g).unwrap();
        let phys = music3d_search(&h, &grid.with_physical_only(true), &g).unwrap();
        assert_eq!(all.evaluations, 21 * 21 * 4);
        assert!(phys.evaluations < all.evaluations);
        assert_eq!(all.index, phys.index);
    }

    #[test]
    fn gates() {
        let g = small();
        let h = channel(&g, 0.0, 0.0, 1.0);
        let huge = GridSpec::full(1001, 1001, 1.0, 2.0, 11).unwrap();
        assert!(matches!(music3d_search(&h, &huge, &g), Err(Error::GridTooLarge { .. })));
        let big = ArrayGeometry::quarter_wavelength(23, 23, 0.03).unwrap();
        let hb = Array1::from_elem(529, Complex64::new(1.0, 0.0));
        let grid = GridSpec::full(3, 3, 1.0, 2.0, 2).unwrap();
        assert!(matches!(music3d_search(&hb, &grid, &big), Err(Error::DenseSizeExceeded { .. })));
        assert!(GridSpec::full(1, 3, 1.0, 2.0, 2).is_err());
        assert!(GridSpec::full(3, 3, 0.0, 2.0, 2).is_err());
        assert!(GridSpec::full(3, 3, 2.0, 1.0, 2).is_err());
    }

    #[test]
    fn log_range_axis() {
        let grid = GridSpec::full(3, 3, 1.0, 100.0, 3).unwrap().with_log_range();
        assert_eq!(grid.r_value(0), 1.0);
        assert!((grid.r_value(1) - 10.0).abs() < 1e-12);
        assert_eq!(grid.r_value(2), 100.0);
    }

    #[test]
    fn oracle_distance_nearest_node() {
        let g = ArrayGeometry::reference_41x41();
        let f = f_vector(0.2, 0.1, &g);
        let r0 = 5.00037;
        let t = f.mapv(|x| Complex64::from_polar(1.0, x / r0 + 0.7));
        let r = oracle_distance_grid(&t, &f, 1.0, 20.0, 1e-3).unwrap();
        assert!((r - 5.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn oracle_refinement_never_worse() {
        let g = ArrayGeometry::quarter_wavelength(15, 15, 0.03).unwrap();
        let f = f_vector(-0.1, 0.3, &g);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t: Array1<Complex64> = f.mapv(|x| Complex64::from_polar(1.0, x / 1.3 + 0.05 * (rng.random::<f64>() - 0.5)));
        let mut prev = f64::INFINITY;
        for step in [0.08, 0.04, 0.02, 0.01] {
            let r = oracle_distance_grid(&t, &f, 0.5, 4.5, step).unwrap();
            let obj = oracle_distance_objective(&t, &f, r);
            assert!(obj <= prev + 1e-15);
            prev = obj;
        }
    }
}
