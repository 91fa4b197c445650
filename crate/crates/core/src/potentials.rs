//! Potentials on the torus `[0, 2π)²`.
//!
//! Default parameter values are the ones used for the reference experiments.
//! Spherical potentials live in [`crate::sphere`].

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::grid::{freq_norm_sq, CoeffMap, Grid};
use crate::harness::grf::grf_scale;
use crate::{rng, Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BarrierParams {
    pub v0: f64,
    /// Width parameter of the openings.
    pub w: f64,
    /// Half-width of each opening; a point is open when `|y - c| ≤ half_width`.
    pub slit_half_width: f64,
    pub slit_centers: Vec<f64>,
    /// x position of the one-column wall (snapped to the nearest grid column).
    pub x_wall: f64,
}

impl Default for BarrierParams {
    fn default() -> Self {
        BarrierParams {
            v0: 50.0,
            w: 0.2,
            slit_half_width: 0.2,
            slit_centers: vec![PI],
            x_wall: PI,
        }
    }
}

impl BarrierParams {
    /// Two openings of width `w` centred at `π ± 3w`.
    pub fn double_slit() -> Self {
        let d = BarrierParams::default();
        BarrierParams {
            slit_half_width: d.w / 2.0,
            slit_centers: vec![PI - 3.0 * d.w, PI + 3.0 * d.w],
            ..d
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarmonicParams {
    pub m: f64,
    pub omega: f64,
    pub center: [f64; 2],
}

impl Default for HarmonicParams {
    fn default() -> Self {
        HarmonicParams {
            m: 1.0,
            omega: 2.0,
            center: [PI, PI],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PaulTrapParams {
    pub u0: f64,
    pub v0: f64,
    pub omega: f64,
    pub r0: f64,
}

impl Default for PaulTrapParams {
    fn default() -> Self {
        PaulTrapParams {
            u0: 10.0,
            v0: 15.0,
            omega: 3.0,
            r0: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShakenLatticeParams {
    pub v0: f64,
    pub k_lat: f64,
    pub amplitude: f64,
    pub omega: f64,
}

impl Default for ShakenLatticeParams {
    fn default() -> Self {
        ShakenLatticeParams {
            v0: 4.0,
            k_lat: 4.0 * PI,
            amplitude: 0.08,
            omega: 15.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianPulseParams {
    pub v0: f64,
    pub center: [f64; 2],
    pub sigma: [f64; 2],
    pub sigma_t: f64,
    pub t_centers: Vec<f64>,
}

impl Default for GaussianPulseParams {
    fn default() -> Self {
        GaussianPulseParams {
            v0: 100.0,
            center: [0.0, 0.0],
            sigma: [1.2, 1.2],
            sigma_t: 1.0,
            t_centers: vec![0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomFieldParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for RandomFieldParams {
    fn default() -> Self {
        RandomFieldParams {
            alpha: 1.0,
            beta: 1.0,
            gamma: 4.0,
            seed: 0,
        }
    }
}

/// A potential sampled once from a Gaussian random field and then frozen.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomFieldPotential {
    pub params: RandomFieldParams,
    grid: Grid,
    values: Vec<f64>,
}

impl RandomFieldPotential {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Free,
    Barrier(BarrierParams),
    HarmonicOscillator(HarmonicParams),
    RandomField(RandomFieldPotential),
    PaulTrap(PaulTrapParams),
    ShakenLattice(ShakenLatticeParams),
    GaussianPulse(GaussianPulseParams),
    /// Spatially constant `V(x) = a`.
    Constant(f64),
}

/// Names accepted in configuration files.
pub const TORUS_POTENTIALS: [&str; 7] = [
    "free_particle",
    "barrier",
    "harmonic_oscillator",
    "random_field",
    "paul_trap",
    "shaken_lattice",
    "gaussian_pulse",
];

fn params_or_default<T: Default + for<'de> Deserialize<'de>>(params: Option<&Value>) -> Result<T> {
    match params {
        None | Some(Value::Null) => Ok(T::default()),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::config(format!("potential params: {e}"))),
    }
}

impl Potential {
    /// Builds a potential from its configuration name and optional parameter
    /// overrides. The random field is sampled on `grid`.
    pub fn from_config(name: &str, params: Option<&Value>, grid: &Grid) -> Result<Self> {
        Ok(match name {
            "free" | "free_particle" => Potential::Free,
            "barrier" => Potential::Barrier(params_or_default(params)?),
            "double_slit" => {
                let mut p = BarrierParams::double_slit();
                if let Some(Value::Object(o)) = params {
                    let mut merged = serde_json::to_value(&p)?;
                    for (k, v) in o {
                        merged[k] = v.clone();
                    }
                    p = serde_json::from_value(merged)?;
                }
                Potential::Barrier(p)
            }
            "harmonic_oscillator" | "harmonic" => Potential::HarmonicOscillator(params_or_default(params)?),
            "random_field" | "random" => {
                let p: RandomFieldParams = params_or_default(params)?;
                sample_random_potential(p.alpha, p.beta, p.gamma, p.seed, grid)?
            }
            "paul_trap" => Potential::PaulTrap(params_or_default(params)?),
            "shaken_lattice" => Potential::ShakenLattice(params_or_default(params)?),
            "gaussian_pulse" => Potential::GaussianPulse(params_or_default(params)?),
            "constant" => {
                let a = match params {
                    Some(v) => v.get("a").and_then(Value::as_f64).ok_or_else(|| Error::config("constant potential needs params.a"))?,
                    None => 0.0,
                };
                Potential::Constant(a)
            }
            other => return Err(Error::config(format!("unknown torus potential `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::Free => "free_particle",
            Potential::Barrier(_) => "barrier",
            Potential::HarmonicOscillator(_) => "harmonic_oscillator",
            Potential::RandomField(_) => "random_field",
            Potential::PaulTrap(_) => "paul_trap",
            Potential::ShakenLattice(_) => "shaken_lattice",
            Potential::GaussianPulse(_) => "gaussian_pulse",
            Potential::Constant(_) => "constant",
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(
            self,
            Potential::PaulTrap(_) | Potential::ShakenLattice(_) | Potential::GaussianPulse(_)
        )
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Free) || matches!(self, Potential::Constant(a) if *a == 0.0)
    }

    /// `V(x, t)` at every grid point.
    pub fn evaluate(&self, grid: &Grid, t: f64) -> Result<Vec<f64>> {
        if grid.dim() != 2 && !matches!(self, Potential::Free | Potential::Constant(_)) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: grid.dim(),
            });
        }
        match self {
            Potential::Free => Ok(vec![0.0; grid.len()]),
            Potential::Constant(a) => Ok(vec![*a; grid.len()]),
            Potential::RandomField(rf) => {
                if rf.grid != *grid {
                    return Err(Error::GridMismatch);
                }
                Ok(rf.values.clone())
            }
            Potential::Barrier(b) => {
                let h = grid.spacing();
                let n = grid.n_per_dim();
                let wall = ((b.x_wall / h).round() as usize) % n;
                let mut v = vec![0.0; grid.len()];
                for (j, y) in grid.axis_points().into_iter().enumerate() {
                    let open = b
                        .slit_centers
                        .iter()
                        .any(|c| (y - c).abs() <= b.slit_half_width);
                    if !open {
                        v[wall * n + j] = b.v0;
                    }
                }
                Ok(v)
            }
            _ => Ok(grid
                .points()
                .map(|x| self.value_at(x, t, grid.length()))
                .collect()),
        }
    }

    /// Pointwise value for the closed-form variants. The barrier and random
    /// field are grid objects and evaluate to zero here.
    pub fn value_at(&self, x: [f64; 2], t: f64, length: f64) -> f64 {
        match self {
            Potential::Free | Potential::Barrier(_) | Potential::RandomField(_) => 0.0,
            Potential::Constant(a) => *a,
            Potential::HarmonicOscillator(p) => {
                let dx = x[0] - p.center[0];
                let dy = x[1] - p.center[1];
                0.5 * p.m * p.omega * p.omega * (dx * dx + dy * dy)
            }
            Potential::PaulTrap(p) => {
                (p.u0 + p.v0 * (p.omega * t).cos()) / (p.r0 * p.r0) * (x[0] * x[0] + x[1] * x[1])
            }
            Potential::ShakenLattice(p) => {
                p.v0 * (p.k_lat * (x[0] - p.amplitude * (p.omega * t).sin())).cos() + p.v0 * (p.k_lat * x[1]).cos()
            }
            Potential::GaussianPulse(p) => {
                // Minimum-image displacement: the pulse is periodic on the torus.
                let wrap = |d: f64| d - length * (d / length).round();
                let dx = wrap(x[0] - p.center[0]);
                let dy = wrap(x[1] - p.center[1]);
                let space = (-dx * dx / (2.0 * p.sigma[0] * p.sigma[0]) - dy * dy / (2.0 * p.sigma[1] * p.sigma[1])).exp();
                let time: f64 = p
                    .t_centers
                    .iter()
                    .map(|t0| (-(t - t0) * (t - t0) / (2.0 * p.sigma_t * p.sigma_t)).exp())
                    .sum();
                p.v0 * space * time
            }
        }
    }
}

/// Draws a real potential from a Gaussian random field with spectral scale
/// `α^{1/2} (4π²|k|² + β)^{-γ/2}`.
///
/// Coefficients are drawn Hermitian-symmetric, `c_{-k} = conj(c_k)`, so the
/// synthesised field is real; the residual imaginary roundoff is discarded.
pub fn sample_random_potential(alpha: f64, beta: f64, gamma: f64, seed: u64, grid: &Grid) -> Result<Potential> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::config("random field needs alpha, beta > 0"));
    }
    if gamma <= grid.dim() as f64 / 2.0 {
        return Err(Error::config(format!(
            "random field needs gamma > d/2 = {}, got {gamma}",
            grid.dim() as f64 / 2.0
        )));
    }
    let coeffs = hermitian_grf_coeffs(alpha, beta, gamma, seed, grid)?;
    let values = coeffs.inverse_coeffs().into_values().into_iter().map(|z| z.re).collect();
    Ok(Potential::RandomField(RandomFieldPotential {
        params: RandomFieldParams {
            alpha,
            beta,
            gamma,
            seed,
        },
        grid: grid.clone(),
        values,
    }))
}

pub(crate) fn hermitian_grf_coeffs(alpha: f64, beta: f64, gamma: f64, seed: u64, grid: &Grid) -> Result<CoeffMap> {
    let mut r = rng::stream(seed, &[rng::tag::POTENTIAL]);
    let mut coeffs = CoeffMap::zeros(grid);
    let mut done = vec![false; grid.len()];
    for o in 0..grid.len() {
        if done[o] {
            continue;
        }
        let k = grid.freq_at(o);
        let scale = grf_scale(alpha, beta, gamma, freq_norm_sq(k));
        let partner = grid.freq_offset([-k[0], -k[1]])?;
        if partner == o {
            let z: f64 = r.sample(StandardNormal);
            coeffs.entries_mut()[o] = C64::new(z * scale, 0.0);
        } else {
            let z = C64::new(r.sample(StandardNormal), r.sample(StandardNormal)) * (scale / 2f64.sqrt());
            coeffs.entries_mut()[o] = z;
            coeffs.entries_mut()[partner] = z.conj();
            done[partner] = true;
        }
        done[o] = true;
    }
    Ok(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GridFunction;

    fn torus(n: usize) -> Grid {
        Grid::new(2, n, 2.0 * PI).unwrap()
    }

    #[test]
    fn free_is_zero() {
        let g = torus(16);
        assert!(Potential::Free.evaluate(&g, 3.0).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn harmonic_minimum_at_center() {
        let p = Potential::HarmonicOscillator(HarmonicParams::default());
        assert_eq!(p.value_at([PI, PI], 0.0, 2.0 * PI), 0.0);
        assert!((p.value_at([PI + 1.0, PI], 0.0, 2.0 * PI) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn paul_trap_hand_value() {
        let p = Potential::PaulTrap(PaulTrapParams::default());
        assert!((p.value_at([1.0, 1.0], 0.0, 2.0 * PI) - 12.5).abs() < 1e-12);
    }

    #[test]
    fn time_independent_variants_ignore_t() {
        let g = torus(16);
        for name in ["free_particle", "barrier", "harmonic_oscillator", "random_field"] {
            let p = Potential::from_config(name, None, &g).unwrap();
            assert!(!p.is_time_dependent());
            assert_eq!(p.evaluate(&g, 0.0).unwrap(), p.evaluate(&g, 17.3).unwrap(), "{name}");
        }
    }

    #[test]
    fn barrier_column_geometry() {
        let g = torus(64);
        let b = BarrierParams::default();
        let v = Potential::Barrier(b.clone()).evaluate(&g, 0.0).unwrap();
        let wall = 32;
        for (j, y) in g.axis_points().into_iter().enumerate() {
            let expected = if (y - PI).abs() <= b.w { 0.0 } else { b.v0 };
            assert_eq!(v[wall * 64 + j], expected);
        }
        let off_wall: f64 = v
            .iter()
            .enumerate()
            .filter(|(o, _)| o / 64 != wall)
            .map(|(_, x)| x.abs())
            .sum();
        assert_eq!(off_wall, 0.0);

        let double = Potential::from_config("double_slit", None, &g).unwrap();
        let v2 = double.evaluate(&g, 0.0).unwrap();
        let opened = (0..64).filter(|&j| v2[wall * 64 + j] == 0.0).count();
        assert!(opened >= 2);
        assert_eq!(v2[wall * 64 + 32], 50.0);
    }

    #[test]
    fn shaken_lattice_at_zero_is_static_lattice() {
        let g = torus(16);
        let p = ShakenLatticeParams::default();
        let v = Potential::ShakenLattice(p.clone()).evaluate(&g, 0.0).unwrap();
        for (x, val) in g.points().zip(v) {
            let expected = p.v0 * (p.k_lat * x[0]).cos() + p.v0 * (p.k_lat * x[1]).cos();
            assert!((val - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_pulse_is_periodic_corner_pulse() {
        let p = Potential::GaussianPulse(GaussianPulseParams::default());
        let l = 2.0 * PI;
        assert!((p.value_at([0.0, 0.0], 0.0, l) - 100.0).abs() < 1e-12);
        let a = p.value_at([0.3, 0.1], 0.5, l);
        let b = p.value_at([l - 0.3, l - 0.1], 0.5, l);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn random_potential_is_deterministic_and_real() {
        let g = torus(32);
        let a = sample_random_potential(1.0, 1.0, 4.0, 5, &g).unwrap();
        let b = sample_random_potential(1.0, 1.0, 4.0, 5, &g).unwrap();
        assert_eq!(a, b);
        let c = hermitian_grf_coeffs(1.0, 1.0, 4.0, 5, &g).unwrap();
        let imag = c.inverse_coeffs().values().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(imag < 1e-15);
        assert!(sample_random_potential(1.0, 1.0, 1.0, 5, &g).is_err());
    }

    #[test]
    fn random_potential_spectral_ratio() {
        // Mean coefficient magnitudes at |k| = 1 and |k| = 2 over 1000 draws.
        let g = torus(8);
        let gamma = 4.0;
        let (mut m1, mut m2) = (0.0, 0.0);
        let draws = 1000;
        for seed in 0..draws {
            let c = hermitian_grf_coeffs(1.0, 1.0, gamma, seed, &g).unwrap();
            m1 += c.get([1, 0]).unwrap().norm();
            m2 += c.get([2, 0]).unwrap().norm();
        }
        let expected = ((4.0 * PI * PI + 1.0) / (16.0 * PI * PI + 1.0)).powf(gamma / 2.0);
        let ratio = m2 / m1;
        assert!((ratio / expected - 1.0).abs() < 0.05, "ratio {ratio} expected {expected}");
    }

    #[test]
    fn dimension_and_grid_checks() {
        let g1 = Grid::new(1, 16, 2.0 * PI).unwrap();
        assert!(Potential::HarmonicOscillator(HarmonicParams::default()).evaluate(&g1, 0.0).is_err());
        let g = torus(16);
        let rf = Potential::from_config("random_field", None, &g).unwrap();
        assert!(rf.evaluate(&torus(32), 0.0).is_err());
        assert!(Potential::from_config("nonsense", None, &g).is_err());
    }
}
