//! Gaussian random fields with spectral scale `α^{1/2}(λ + β)^{-γ/2}`, where
//! `λ = 4π²|k|²` on the torus and `λ = ℓ(ℓ+1)` on the sphere.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::grid::{freq_inf_norm, freq_norm_sq, CoeffMap, Field, Grid};
use crate::rng::StreamRng;
use crate::sphere::{sht_inverse, SphCoeffMap, SphereField, SphereGrid};
use crate::{Error, Result, C64};

/// Per-mode scale at squared integer frequency `k2 = |k|²`.
pub fn grf_scale(alpha: f64, beta: f64, gamma: f64, k2: f64) -> f64 {
    alpha.sqrt() * (4.0 * std::f64::consts::PI.powi(2) * k2 + beta).powf(-gamma / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrfSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `|k|∞` cutoff on the torus; `None` samples up to Nyquist.
    pub bandwidth: Option<i64>,
}

impl Default for GrfSpec {
    fn default() -> Self {
        GrfSpec {
            alpha: 1.0,
            beta: 1.0,
            gamma: 4.0,
            bandwidth: None,
        }
    }
}

impl GrfSpec {
    pub fn band_limited(k_max: i64) -> Self {
        GrfSpec {
            bandwidth: Some(k_max),
            ..GrfSpec::default()
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::config("GRF needs alpha, beta > 0"));
        }
        if self.gamma <= d as f64 / 2.0 {
            return Err(Error::config(format!("GRF needs gamma > d/2, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Coefficients of a torus GRF draw: one real standard normal per mode.
pub fn sample_grf_coeffs(spec: &GrfSpec, grid: &Grid, rng: &mut StreamRng) -> Result<CoeffMap> {
    spec.validate(grid.dim())?;
    let entries = grid
        .freqs()
        .map(|k| {
            let z: f64 = rng.sample(StandardNormal);
            let inside = spec.bandwidth.is_none_or(|b| freq_inf_norm(k) <= b);
            if inside {
                C64::new(z * grf_scale(spec.alpha, spec.beta, spec.gamma, freq_norm_sq(k)), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    CoeffMap::from_entries(grid, entries)
}

pub fn sample_grf(spec: &GrfSpec, grid: &Grid, rng: &mut StreamRng) -> Result<Field> {
    Ok(sample_grf_coeffs(spec, grid, rng)?.inverse_coeffs())
}

/// Sphere GRF, band-limited to the grid's `l_max`, with scale
/// `α^{1/2}(ℓ(ℓ+1) + β)^{-γ/2}`.
pub fn sample_sphere_grf(spec: &GrfSpec, grid: &SphereGrid, rng: &mut StreamRng) -> Result<SphereField> {
    spec.validate(2)?;
    let entries = grid
        .indices()
        .into_iter()
        .map(|(l, _)| {
            let z: f64 = rng.sample(StandardNormal);
            let lambda = (l * (l + 1)) as f64;
            C64::new(z * spec.alpha.sqrt() * (lambda + spec.beta).powf(-spec.gamma / 2.0), 0.0)
        })
        .collect();
    sht_inverse(&SphCoeffMap::from_entries(grid.l_max(), entries)?, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::f64::consts::PI;

    #[test]
    fn zero_mode_is_unscaled_normal() {
        let g = Grid::new(2, 8, 2.0 * PI).unwrap();
        let c = sample_grf_coeffs(&GrfSpec::default(), &g, &mut rng::stream(1, &[])).unwrap();
        let mut r = rng::stream(1, &[]);
        let z: f64 = r.sample(StandardNormal);
        assert_eq!(c.get([0, 0]).unwrap(), C64::new(z, 0.0));
    }

    #[test]
    fn deterministic_per_seed() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let a = sample_grf(&GrfSpec::default(), &g, &mut rng::stream(9, &[1])).unwrap();
        let b = sample_grf(&GrfSpec::default(), &g, &mut rng::stream(9, &[1])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spectral_variance_ratio() {
        let g = Grid::new(2, 8, 2.0 * PI).unwrap();
        let (mut e1, mut e2) = (0.0, 0.0);
        for i in 0..2000 {
            let c = sample_grf_coeffs(&GrfSpec::default(), &g, &mut rng::stream(10, &[i])).unwrap();
            e1 += c.get([1, 0]).unwrap().norm_sqr();
            e2 += c.get([2, 0]).unwrap().norm_sqr();
        }
        let expected = ((16.0 * PI * PI + 1.0) / (4.0 * PI * PI + 1.0)).powf(4.0);
        assert!(((e1 / e2) / expected - 1.0).abs() < 0.1);
    }

    #[test]
    fn bandwidth_and_validation() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let c = sample_grf_coeffs(&GrfSpec::band_limited(3), &g, &mut rng::stream(2, &[])).unwrap();
        assert!(c.iter().all(|(k, v)| freq_inf_norm(k) <= 3 || v == C64::new(0.0, 0.0)));
        let bad = GrfSpec { gamma: 1.0, ..GrfSpec::default() };
        assert!(sample_grf(&bad, &g, &mut rng::stream(2, &[])).is_err());
    }

    #[test]
    fn sobolev_norm_stable_under_refinement() {
        // Same draw on two resolutions: sample on 256², truncate to 128².
        let fine = Grid::new(2, 256, 2.0 * PI).unwrap();
        let coarse = Grid::new(2, 128, 2.0 * PI).unwrap();
        let c = sample_grf_coeffs(&GrfSpec::default(), &fine, &mut rng::stream(3, &[])).unwrap();
        let fine_norm = c.sobolev_norm(2.0);
        let pairs = c.iter().filter(|(k, _)| freq_inf_norm(*k) < 64);
        let coarse_norm = CoeffMap::from_pairs(&coarse, pairs).unwrap().sobolev_norm(2.0);
        assert!(fine_norm.is_finite());
        assert!((fine_norm - coarse_norm).abs() / fine_norm < 1e-2);
    }
}
