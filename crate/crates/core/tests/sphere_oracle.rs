//! The sphere propagator against a dense matrix exponential built from the
//! analytic dipole matrix elements
//! `⟨ℓ+1, m| cos θ |ℓ, m⟩ = sqrt(((ℓ+1)² − m²) / ((2ℓ+1)(2ℓ+3)))`.

use nalgebra::DMatrix;
use oplearn::solver::SolverConfig;
use oplearn::sphere::{coeff_position, potential_matrix, DipoleParams, SphCoeffMap, SphereGrid, SpherePotential, SpherePropagator};
use oplearn::C64;

const L_MAX: usize = 10;

fn cos_theta_matrix() -> DMatrix<C64> {
    let n = (L_MAX + 1) * (L_MAX + 1);
    let mut c = DMatrix::zeros(n, n);
    for l in 0..L_MAX {
        for m in -(l as i64)..=(l as i64) {
            let (lf, mf) = (l as f64, m as f64);
            let v = (((lf + 1.0).powi(2) - mf * mf) / ((2.0 * lf + 1.0) * (2.0 * lf + 3.0))).sqrt();
            let (a, b) = (coeff_position(l, m), coeff_position(l + 1, m));
            c[(a, b)] = C64::new(v, 0.0);
            c[(b, a)] = C64::new(v, 0.0);
        }
    }
    c
}

fn hamiltonian(v0: f64) -> DMatrix<C64> {
    let mut h = cos_theta_matrix() * C64::new(v0, 0.0);
    for l in 0..=L_MAX {
        for m in -(l as i64)..=(l as i64) {
            let p = coeff_position(l, m);
            h[(p, p)] += C64::new((l * (l + 1)) as f64 / 2.0, 0.0);
        }
    }
    h
}

fn exact(h: &DMatrix<C64>, t: f64, c0: &SphCoeffMap) -> Vec<C64> {
    let u = (h * C64::new(0.0, -t)).exp();
    (u * nalgebra::DVector::from_column_slice(c0.entries())).as_slice().to_vec()
}

fn grid() -> SphereGrid {
    SphereGrid::new(64, 32, L_MAX).unwrap()
}

fn y10() -> SphCoeffMap {
    let mut c = SphCoeffMap::zeros(L_MAX);
    c.set(1, 0, C64::new(1.0, 0.0)).unwrap();
    c
}

#[test]
fn quadrature_matrix_matches_analytic_elements() {
    let v0 = 1.7;
    let m = potential_matrix(&grid(), &SpherePotential::Dipole(DipoleParams { v0 })).unwrap();
    let diff = (m - cos_theta_matrix() * C64::new(v0, 0.0)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn single_step_matches_dense_exponential() {
    let dt = 1e-3;
    let v0 = DipoleParams::default().v0;
    let cfg = SolverConfig { t_final: dt, dt, ..Default::default() };
    let prop = SpherePropagator::new(&grid(), &SpherePotential::Dipole(DipoleParams { v0 }), cfg).unwrap();
    let out = prop.evolve_coeffs(&y10()).unwrap();
    let reference = exact(&hamiltonian(v0), dt, &y10());
    let err: f64 = out.entries().iter().zip(&reference).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    assert!(err < 1e-9, "{err}");

    // First-order leakage lands in ℓ ∈ {0, 2}, m = 0 only.
    let c10 = cos_theta_matrix()[(coeff_position(0, 0), coeff_position(1, 0))].re;
    let c12 = cos_theta_matrix()[(coeff_position(1, 0), coeff_position(2, 0))].re;
    for (l, c) in [(0, c10), (2, c12)] {
        let got = out.get(l, 0).unwrap().norm();
        assert!((got / (v0 * dt * c) - 1.0).abs() < 0.05, "ℓ = {l}: {got}");
    }
    for l in 0..=L_MAX {
        for m in -(l as i64)..=(l as i64) {
            let v = out.get(l, m).unwrap().norm();
            if m != 0 {
                assert!(v < 1e-14, "({l}, {m}) = {v}");
            } else if l >= 3 {
                assert!(v < dt * dt, "({l}, {m}) = {v}");
            }
        }
    }
}

#[test]
fn full_window_converges_to_dense_exponential() {
    let v0 = 2.0;
    let h = hamiltonian(v0);
    let reference = exact(&h, 0.1, &y10());
    let errs: Vec<f64> = [2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let cfg = SolverConfig { dt, ..Default::default() };
            let prop = SpherePropagator::new(&grid(), &SpherePotential::Dipole(DipoleParams { v0 }), cfg).unwrap();
            let out = prop.evolve_coeffs(&y10()).unwrap();
            out.entries().iter().zip(&reference).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        })
        .collect();
    assert!(errs[1] < 1e-6, "{errs:?}");
    let order = (errs[0] / errs[1]).log2();
    assert!((order - 2.0).abs() < 0.2, "{errs:?}");
}
