//! The reference solver: agreement with the free closed form, norm
//! preservation, and the second-order convergence of Strang splitting.

use std::f64::consts::PI;

use oplearn::grid::Grid;
use oplearn::harness::grf::sample_grf;
use oplearn::harness::GrfSpec;
use oplearn::potentials::{HarmonicParams, Potential};
use oplearn::solver::{convergence_order, evolve, free_exact, SolverConfig};
use oplearn::{rng, GridFunction};

fn main() -> oplearn::Result<()> {
    let grid = Grid::new(2, 64, 2.0 * PI)?;
    let psi = sample_grf(&GrfSpec::default(), &grid, &mut rng::stream(7, &[0]))?;
    let cfg = SolverConfig::default();

    let split = evolve(&psi, &Potential::Free, cfg)?;
    let exact = free_exact(&psi, cfg.t_final, cfg.hbar, cfg.mass);
    println!("free: split-step vs closed form {:.3e}", split.difference(&exact)?.l2_norm() / exact.l2_norm());

    let ho = Potential::HarmonicOscillator(HarmonicParams::default());
    let out = evolve(&psi, &ho, cfg)?;
    println!("harmonic: ‖ψ(0)‖ = {:.15}, ‖ψ(T)‖ = {:.15}", psi.l2_norm(), out.l2_norm());

    let report = convergence_order(&psi, &ho, cfg, &[1e-2, 5e-3, 2.5e-3])?;
    for (dt, e) in report.dts.iter().zip(&report.errors) {
        println!("dt = {dt:<8} error vs dt = {:.2e}: {e:.3e}", report.reference_dt);
    }
    println!("observed order {:.3}", report.order);
    Ok(())
}
