//! Upper and lower bounds against measured errors of the adversarial
//! solver, and the uncorrelated-noise contrast.

use std::f64::consts::PI;

use oplearn::bounds::{lowerbound_point, uncorrelated_noise_sweep};
use oplearn::grid::Grid;

fn main() -> oplearn::Result<()> {
    let grid = Grid::new(2, 64, 2.0 * PI)?;
    let eps = 1e-2;
    println!("{:>4} {:>5} {:>9} {:>10} {:>10} {:>10} {:>10}", "s", "n", "γ_n", "upper", "lower", "measured", "eps-term");
    for s in [0.5, 2.0] {
        for n in [9, 25, 81, 289, 1089] {
            let p = lowerbound_point(&grid, n, s, eps, 0.1)?;
            let lower = (p.lower_solver_term + p.lower_tail_term) / 2f64.sqrt();
            println!(
                "{s:>4} {n:>5} {:>9.3} {:>10.3e} {lower:>10.3e} {:>10.3e} {:>10.3e}",
                p.gamma_n, p.upper, p.measured_error, p.measured_eps_term
            );
        }
    }
    println!("\nuncorrelated column noise, s = 0.5, 10 draws:");
    for p in uncorrelated_noise_sweep(&grid, &[9, 81, 1089], 0.5, eps, 0.1, 10, 8, 0)? {
        println!("  n = {:>5}: mean sup error {:.4e} ± {:.1e}", p.n, p.mean_sup_error, p.std_error);
    }
    Ok(())
}
