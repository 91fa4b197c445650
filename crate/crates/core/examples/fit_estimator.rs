//! Fits an estimator by probing the solver, applies it, checks weak
//! unitarity, saves and reloads it.
//!
//! `cargo run --release --example fit_estimator [potential] [grid_n]`

use std::f64::consts::PI;

use oplearn::estimator::{fit, AnyEstimator, FitConfig, TorusBasis};
use oplearn::grid::Grid;
use oplearn::harness::grf::sample_grf;
use oplearn::harness::noise::relative_error;
use oplearn::harness::GrfSpec;
use oplearn::potentials::Potential;
use oplearn::rng;
use oplearn::solver::{SolverConfig, SplitStepSolver};
use oplearn::estimator::QueryOracle;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "harmonic_oscillator".into());
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(64);

    let grid = Grid::new(2, n, 2.0 * PI)?;
    let potential = Potential::from_config(&name, None, &grid)?;
    let solver = SplitStepSolver::new(&grid, &potential, SolverConfig::default())?;
    let basis = TorusBasis::for_budget(&grid, 1089)?;

    let start = std::time::Instant::now();
    let est = fit(&solver, &basis, FitConfig { noise_rel: 1e-3, seed: 1, ..Default::default() })?;
    println!("{name}: {} queries in {:.1} s", est.num_queries(), start.elapsed().as_secs_f64());

    let psi = sample_grf(&GrfSpec::default(), &grid, &mut rng::stream(2, &[0]))?;
    let err = relative_error(&est.apply(&psi)?, &solver.query(&psi)?)?;
    println!("relative error on a full-band GRF draw: {err:.4e}");

    let rep = est.weak_unitarity_report(50, 200, 3);
    println!("Gram deviation {:.3e}, max expansion {:.9}", rep.max_gram_error, rep.max_expansion);

    let dir = std::env::temp_dir().join("oplearn_example.est");
    est.save(&dir)?;
    match AnyEstimator::load(&dir)? {
        AnyEstimator::Torus(back) => println!("reloaded: identical = {}", back.columns() == est.columns()),
        AnyEstimator::Sphere(_) => unreachable!(),
    }
    std::fs::remove_file(dir)?;
    Ok(())
}
