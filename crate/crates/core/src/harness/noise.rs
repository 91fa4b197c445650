//! Measurement noise, coefficient masking and the relative error metric.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::field::GridFunction;
use crate::rng::StreamRng;
use crate::{Error, Result, C64};

/// Per-point noise scale for relative level `r`: complex white noise
/// `σ(Z_re + iZ_im)` has `E‖ε‖² = 2σ²·volume`, so `σ = r‖f‖/√(2·volume)`
/// gives `‖ε‖ ≈ r‖f‖`.
pub fn noise_sigma<F: GridFunction>(f: &F, rel_level: f64) -> f64 {
    rel_level * f.l2_norm() / (2.0 * f.volume()).sqrt()
}

/// `f + ε` with white complex Gaussian `ε` of relative size `rel_level`.
/// `rel_level = 0` returns `f` unchanged and draws nothing.
pub fn add_noise<F: GridFunction>(f: &F, rel_level: f64, rng: &mut StreamRng) -> F {
    let mut out = f.clone();
    if rel_level == 0.0 {
        return out;
    }
    let sigma = noise_sigma(f, rel_level);
    for v in out.values_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += C64::new(re, im) * sigma;
    }
    out
}

/// Keep-mask with each entry independently dropped with probability `p`.
pub fn draw_mask(len: usize, p: f64, rng: &mut StreamRng) -> Vec<bool> {
    (0..len).map(|_| !rng.random_bool(p)).collect()
}

/// Zeroes each entry independently with probability `p`. `p = 0` is the
/// identity and draws nothing.
pub fn mask_coeffs(coeffs: &mut [C64], p: f64, rng: &mut StreamRng) -> Result<()> {
    check_probability(p)?;
    if p == 0.0 {
        return Ok(());
    }
    for c in coeffs.iter_mut() {
        if rng.random_bool(p) {
            *c = C64::new(0.0, 0.0);
        }
    }
    Ok(())
}

pub fn apply_mask(coeffs: &mut [C64], keep: &[bool]) {
    coeffs
        .iter_mut()
        .zip(keep)
        .filter(|(_, &k)| !k)
        .for_each(|(c, _)| *c = C64::new(0.0, 0.0));
}

pub fn check_probability(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::config(format!("mask probability must lie in [0, 1), got {p}")));
    }
    Ok(())
}

/// `‖pred − truth‖ / ‖truth‖`.
pub fn relative_error<F: GridFunction>(pred: &F, truth: &F) -> Result<f64> {
    let denom = truth.l2_norm();
    if denom == 0.0 {
        return Err(Error::Numerical("relative error against a zero field".into()));
    }
    Ok(pred.difference(truth)?.l2_norm() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Field, Grid};
    use crate::rng;
    use std::f64::consts::PI;

    fn sample_field(g: &Grid) -> Field {
        Field::from_fn(g, |x| C64::new(x[0].sin() + 0.3, x[1].cos()))
    }

    #[test]
    fn zero_noise_is_bitwise_identity() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let f = sample_field(&g);
        let mut r = rng::stream(1, &[]);
        assert_eq!(add_noise(&f, 0.0, &mut r), f);
    }

    #[test]
    fn noise_has_requested_relative_size() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let f = sample_field(&g);
        let draws = 500;
        let mean: f64 = (0..draws)
            .map(|i| {
                let mut r = rng::stream(2, &[i]);
                relative_error(&add_noise(&f, 1e-3, &mut r), &f).unwrap()
            })
            .sum::<f64>()
            / draws as f64;
        assert!((mean / 1e-3 - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn noise_is_white_in_coefficients() {
        let g = Grid::new(2, 4, 2.0 * PI).unwrap();
        let f = Field::fourier_mode(&g, [0, 0]).unwrap();
        let draws = 4000;
        let m = g.len();
        let mut cov = vec![C64::new(0.0, 0.0); m * m];
        let mut var = 0.0;
        for i in 0..draws {
            let mut r = rng::stream(3, &[i]);
            let noise = add_noise(&f, 1.0, &mut r).difference(&f).unwrap();
            let c = noise.forward_coeffs().into_entries();
            for a in 0..m {
                var += c[a].norm_sqr();
                for b in 0..m {
                    cov[a * m + b] += c[a] * c[b].conj();
                }
            }
        }
        let var = var / (draws * m as u64) as f64;
        let bound = 5.0 / (draws as f64).sqrt();
        for a in 0..m {
            for b in 0..m {
                if a != b {
                    let rho = cov[a * m + b].norm() / draws as f64 / var;
                    assert!(rho < bound, "({a},{b}) {rho}");
                }
            }
        }
    }

    #[test]
    fn masking_statistics() {
        let mut r = rng::stream(4, &[]);
        let mut c = vec![C64::new(1.0, 0.0); 10_000];
        let orig = c.clone();
        mask_coeffs(&mut c, 0.0, &mut r).unwrap();
        assert_eq!(c, orig);
        let p = 0.2;
        mask_coeffs(&mut c, p, &mut r).unwrap();
        let frac = c.iter().filter(|z| z.norm() == 0.0).count() as f64 / c.len() as f64;
        assert!((frac - p).abs() <= 3.0 * (p * (1.0 - p) / c.len() as f64).sqrt());
        assert!(mask_coeffs(&mut c, 1.0, &mut r).is_err());
    }

    #[test]
    fn masked_field_norm_does_not_grow() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let f = sample_field(&g);
        let mut c = f.forward_coeffs();
        let mut r = rng::stream(5, &[]);
        mask_coeffs(c.entries_mut(), 0.3, &mut r).unwrap();
        assert!(c.inverse_coeffs().l2_norm() <= f.l2_norm());
    }

    #[test]
    fn relative_error_cases() {
        let g = Grid::new(2, 8, 2.0 * PI).unwrap();
        let f = sample_field(&g);
        assert_eq!(relative_error(&f, &f).unwrap(), 0.0);
        assert!((relative_error(&Field::zeros(&g), &f).unwrap() - 1.0).abs() < 1e-15);
        let scaled = f.clone().scaled(C64::new(1.25, 0.0));
        assert!((relative_error(&scaled, &f).unwrap() - 0.25).abs() < 1e-14);
        assert!(relative_error(&f, &Field::zeros(&g)).is_err());
    }
}
