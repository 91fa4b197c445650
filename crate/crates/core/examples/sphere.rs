//! Spherical harmonics on the equiangular grid: orthonormality, the
//! transform roundtrip, and evolution under the dipole potential.

use oplearn::harness::grf::sample_sphere_grf;
use oplearn::harness::GrfSpec;
use oplearn::solver::SolverConfig;
use oplearn::sphere::{evolve_sphere, sht_forward, sht_inverse, sph_harmonic, DipoleParams, SphereGridSpec, SpherePotential};
use oplearn::{rng, GridFunction};

fn main() -> oplearn::Result<()> {
    let grid = SphereGridSpec::default().build()?;
    println!("grid {}×{}, l_max {}, {} coefficients", grid.n_phi(), grid.n_theta(), grid.l_max(), grid.coeff_len());

    let y = sph_harmonic(3, -2, &grid)?;
    let z = sph_harmonic(5, 1, &grid)?;
    println!("‖Y_3^-2‖ = {:.15}, ⟨Y_3^-2, Y_5^1⟩ = {:.2e}", y.l2_norm(), y.inner_product(&z)?.norm());

    let psi = sample_sphere_grf(&GrfSpec::default(), &grid, &mut rng::stream(3, &[0]))?;
    let back = sht_inverse(&sht_forward(&psi), &grid)?;
    println!("roundtrip error {:.3e}", back.difference(&psi)?.l2_norm() / psi.l2_norm());

    let dipole = SpherePotential::Dipole(DipoleParams::default());
    let out = evolve_sphere(&y, &dipole, SolverConfig::default())?;
    let c = sht_forward(&out);
    println!("dipole from Y_3^-2: ‖ψ(T)‖ = {:.15}", out.l2_norm());
    for l in 2..=5 {
        println!("  |c_{l},-2|² = {:.4e}", c.get(l, -2)?.norm_sqr());
    }
    Ok(())
}
