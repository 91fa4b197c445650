//! Accuracy at 0.1% noise for every potential, as CSV on stdout.
//!
//! `cargo run --release --example table2 [grid_n] [trials]`

use oplearn::grid::GridSpec;
use oplearn::harness::experiments::run_accuracy;
use oplearn::harness::{write_rows, ExperimentConfig};
use oplearn::potentials::TORUS_POTENTIALS;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(64);
    let trials: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let mut rows = Vec::new();
    for name in TORUS_POTENTIALS.iter().copied().chain(["coulomb", "dipole"]) {
        let cfg = ExperimentConfig {
            potential: name.into(),
            grid: GridSpec { n, ..Default::default() },
            trials,
            ..Default::default()
        };
        rows.extend(run_accuracy(&cfg)?);
        eprintln!("{name} done");
    }
    write_rows(&rows, std::io::stdout().lock())?;
    Ok(())
}
