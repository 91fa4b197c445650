//! Evaluates every torus potential and prints summary statistics at t = 0
//! and t = 0.05.

use std::f64::consts::PI;

use oplearn::grid::Grid;
use oplearn::potentials::{Potential, TORUS_POTENTIALS};

fn main() -> oplearn::Result<()> {
    let grid = Grid::new(2, 128, 2.0 * PI)?;
    println!("{:<20} {:>6} {:>11} {:>11} {:>11}", "potential", "t", "min", "max", "mean");
    for name in TORUS_POTENTIALS {
        let p = Potential::from_config(name, None, &grid)?;
        for t in [0.0, 0.05] {
            if t > 0.0 && !p.is_time_dependent() {
                continue;
            }
            let v = p.evaluate(&grid, t)?;
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            println!("{name:<20} {t:>6.2} {min:>11.4} {max:>11.4} {mean:>11.4}");
        }
    }
    Ok(())
}
