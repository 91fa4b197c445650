//! Noiseless error against the sample budget for the free particle, with
//! the estimator grown incrementally between budgets.

use oplearn::grid::GridSpec;
use oplearn::harness::experiments::run_convergence;
use oplearn::harness::{ExperimentConfig, ExperimentKind};

fn main() -> anyhow::Result<()> {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::Convergence,
        grid: GridSpec { n: 64, ..Default::default() },
        trials: 20,
        ..Default::default()
    };
    let out = run_convergence(&cfg)?;
    for row in &out.rows {
        println!("n = {:>5}: {:.4e}", row.param_value, row.mean_rel_err);
    }
    println!("log-log slope {:.3}", out.slope);
    Ok(())
}
