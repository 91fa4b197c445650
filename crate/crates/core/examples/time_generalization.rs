//! Repeated application of one fitted step against the true flow.
//!
//! `cargo run --release --example time_generalization [potential] [grid_n]`

use oplearn::grid::GridSpec;
use oplearn::harness::experiments::run_timegen;
use oplearn::harness::{ExperimentConfig, ExperimentKind};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "barrier".into());
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(64);
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::Timegen,
        potential: name,
        grid: GridSpec { n, ..Default::default() },
        trials: 10,
        q_list: vec![1, 2, 4, 8],
        ..Default::default()
    };
    for row in run_timegen(&cfg)? {
        println!("{} j = {:>2}: {:.4e} ± {:.1e}", row.potential, row.param_value, row.mean_rel_err, row.std_rel_err);
    }
    Ok(())
}
