//! Fitting from partially observed responses: each response coefficient is
//! zeroed with probability p before fitting.

use oplearn::grid::GridSpec;
use oplearn::harness::experiments::run_masking;
use oplearn::harness::ExperimentConfig;

fn main() -> anyhow::Result<()> {
    for name in ["free_particle", "random_field"] {
        let cfg = ExperimentConfig {
            potential: name.into(),
            grid: GridSpec { n: 64, ..Default::default() },
            mask_p: vec![0.0, 0.1, 0.2],
            trials: 10,
            ..Default::default()
        };
        for row in run_masking(&cfg)? {
            println!("{name:<15} p = {:.1}: {:.4e}", row.param_value, row.mean_rel_err);
        }
    }
    Ok(())
}
