//! Fourier analysis on the torus: modes, coefficients, Parseval and Sobolev
//! norms, and truncation error as the band grows.

use std::f64::consts::PI;

use oplearn::grid::{Field, Grid};
use oplearn::harness::grf::sample_grf;
use oplearn::harness::GrfSpec;
use oplearn::{rng, GridFunction, C64};

fn main() -> oplearn::Result<()> {
    let grid = Grid::new(2, 64, 2.0 * PI)?;

    let mode = Field::fourier_mode(&grid, [3, -2])?;
    let c = mode.forward_coeffs();
    println!("φ_(3,-2): ‖φ‖ = {:.15}, ⟨φ, φ_(3,-2)⟩ = {:.3e}", mode.l2_norm(), c.get([3, -2])?);

    let f = Field::from_fn(&grid, |x| C64::new((2.0 * x[0]).sin() * x[1].cos(), 0.0));
    let coeffs = f.forward_coeffs();
    println!("Parseval: ‖f‖² = {:.12}, Σ|c_k|² = {:.12}", f.l2_norm().powi(2), coeffs.norm_sq());

    let psi = sample_grf(&GrfSpec::default(), &grid, &mut rng::stream(1, &[0]))?;
    let full = psi.forward_coeffs();
    println!("GRF sample: ‖ψ‖_H0 = {:.4}, ‖ψ‖_H1 = {:.4}, ‖ψ‖_H2 = {:.4}", psi.sobolev_norm(0.0), psi.sobolev_norm(1.0), psi.sobolev_norm(2.0));
    println!("{:>4}  {:>12}", "K", "‖ψ − P_K ψ‖");
    for k in [1, 2, 4, 8, 16] {
        let tail = psi.difference(&full.truncated(k).inverse_coeffs())?.l2_norm();
        println!("{k:>4}  {tail:>12.4e}");
    }
    Ok(())
}
