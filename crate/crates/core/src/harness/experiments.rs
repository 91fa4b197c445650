//! The experiment protocols: accuracy, masking, time generalization,
//! convergence in the budget, and the lower-bound sweep.
//!
//! Every random draw comes from a stream keyed by the master seed, the
//! experiment's stream id, the trial index and a purpose tag. The estimator
//! is always fitted from the stream `(seed, FIT)`, so one fit serves the
//! accuracy and time-generalization protocols alike.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::grf::{sample_grf, sample_sphere_grf};
use super::noise::{add_noise, relative_error};
use super::{ExperimentConfig, ExperimentKind, ResultRow};
use crate::bounds::lowerbound_point;
use crate::estimator::{fit, Estimator, FitConfig, MaskGranularity, QueryOracle, SpectralBasis, SphereBasis, TorusBasis};
use crate::grid::Field;
use crate::potentials::Potential;
use crate::rng::{self, tag, StreamRng};
use crate::solver::{least_squares_slope, FreeExactSolver, SplitStepSolver};
use crate::sphere::{SphereField, SpherePotential, SphereSolver};
use crate::{Error, Result};

/// Stream coordinate of the shared fit.
const FIT_STREAM: u64 = 0xF17;

pub type Oracle<F> = Arc<dyn QueryOracle<F>>;
type WindowFn<F> = Box<dyn Fn(usize) -> Result<Oracle<F>> + Send + Sync>;
type SamplerFn<F> = Box<dyn Fn(&mut StreamRng) -> Result<F> + Send + Sync>;

/// A basis, a solver for the first time window, a way to build later
/// windows, and the test-field distribution.
pub struct Setup<B: SpectralBasis> {
    pub basis: B,
    pub potential: String,
    pub oracle: Oracle<B::Field>,
    windows: WindowFn<B::Field>,
    sampler: SamplerFn<B::Field>,
}

fn trial_stream(master: u64, stream_id: u64, trial: u64, purpose: u64) -> StreamRng {
    rng::stream(master, &[stream_id, trial, purpose])
}

fn finite(errors: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::Numerical(format!("non-finite relative error in {what}")));
    }
    Ok(errors)
}

impl<B: SpectralBasis> Setup<B> {
    pub fn fit_seed(master: u64) -> u64 {
        rng::derive_seed(master, &[FIT_STREAM])
    }

    /// Fits from noisy queries of relative level `noise_rel`.
    pub fn fit(&self, noise_rel: f64, mask_p: f64, granularity: MaskGranularity, master: u64) -> Result<Estimator<B>> {
        let config = FitConfig {
            noise_rel,
            mask_p,
            mask_granularity: granularity,
            seed: Self::fit_seed(master),
        };
        fit(&self.oracle, &self.basis, config)
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Result<B::Field> {
        (self.sampler)(rng)
    }

    /// Per-trial relative errors of `apply(ψ + ε_in)` against the measured
    /// truth `P(ψ) + ε_out`.
    pub fn accuracy_errors(&self, est: &Estimator<B>, noise_rel: f64, master: u64, stream_id: u64, trials: usize) -> Result<Vec<f64>> {
        let errors = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let psi = self.sample(&mut trial_stream(master, stream_id, t, tag::GRF_TEST))?;
                let truth = self.oracle.query(&psi)?;
                let truth = add_noise(&truth, noise_rel, &mut trial_stream(master, stream_id, t, tag::NOISE_TRUTH));
                let input = add_noise(&psi, noise_rel, &mut trial_stream(master, stream_id, t, tag::NOISE_TEST_INPUT));
                relative_error(&est.apply(&input)?, &truth)
            })
            .collect::<Result<Vec<f64>>>()?;
        finite(errors, "accuracy")
    }

    /// Per-`q` (outer) and per-trial (inner) relative errors of
    /// `F̂^q(ψ₀ + ε)` against `P^q(ψ₀) + ε`, where the true flow continues
    /// physical time across windows.
    pub fn timegen_errors(&self, est: &Estimator<B>, noise_rel: f64, master: u64, q_list: &[usize], trials: usize) -> Result<Vec<Vec<f64>>> {
        let sid = ExperimentKind::Timegen.stream_id();
        let q_max = *q_list.last().ok_or_else(|| Error::config("empty q_list"))?;
        let initial = (0..trials as u64)
            .into_par_iter()
            .map(|t| self.sample(&mut trial_stream(master, sid, t, tag::GRF_TEST)))
            .collect::<Result<Vec<_>>>()?;
        let preds = initial
            .par_iter()
            .enumerate()
            .map(|(t, psi)| {
                let input = add_noise(psi, noise_rel, &mut trial_stream(master, sid, t as u64, tag::NOISE_TEST_INPUT));
                est.apply_powers(&input, q_list)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut states = initial;
        let mut out = Vec::with_capacity(q_list.len());
        for j in 1..=q_max {
            let window = (self.windows)(j)?;
            states = states.par_iter().map(|s| window.query(s)).collect::<Result<Vec<_>>>()?;
            if let Some(qi) = q_list.iter().position(|&q| q == j) {
                let errors = states
                    .par_iter()
                    .enumerate()
                    .map(|(t, s)| {
                        let mut r = rng::stream(master, &[sid, t as u64, tag::NOISE_TRUTH, j as u64]);
                        relative_error(&preds[t][qi], &add_noise(s, noise_rel, &mut r))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                out.push(finite(errors, "timegen")?);
            }
        }
        Ok(out)
    }
}

pub fn torus_setup(cfg: &ExperimentConfig) -> Result<Setup<TorusBasis>> {
    let grid = cfg.grid.build()?;
    let potential = Potential::from_config(&cfg.potential, cfg.params.as_ref(), &grid)?;
    let basis = TorusBasis::for_budget(&grid, cfg.budget)?;
    let solver_cfg = cfg.solver;
    let oracle: Oracle<Field> = Arc::new(SplitStepSolver::new(&grid, &potential, solver_cfg)?);
    let first = oracle.clone();
    let windows: WindowFn<Field> = if potential.is_time_dependent() {
        let (grid, potential) = (grid.clone(), potential.clone());
        Box::new(move |j| {
            let o: Oracle<Field> = Arc::new(SplitStepSolver::new(&grid, &potential, solver_cfg.window(j))?);
            Ok(o)
        })
    } else {
        Box::new(move |_| Ok(first.clone()))
    };
    let grf = cfg.grf;
    let sgrid = grid.clone();
    Ok(Setup {
        basis,
        potential: potential.name().to_string(),
        oracle,
        windows,
        sampler: Box::new(move |r| sample_grf(&grf, &sgrid, r)),
    })
}

pub fn sphere_setup(cfg: &ExperimentConfig) -> Result<Setup<SphereBasis>> {
    let grid = cfg.sphere_grid.build()?;
    let potential = SpherePotential::from_config(&cfg.potential, cfg.params.as_ref())?;
    let oracle: Oracle<SphereField> = Arc::new(SphereSolver::new(&grid, &potential, cfg.solver)?);
    let first = oracle.clone();
    let grf = cfg.grf;
    let sgrid = grid.clone();
    Ok(Setup {
        basis: SphereBasis::new(&grid),
        potential: potential.name().to_string(),
        oracle,
        windows: Box::new(move |_| Ok(first.clone())),
        sampler: Box::new(move |r| sample_sphere_grf(&grf, &sgrid, r)),
    })
}

fn accuracy_rows<B: SpectralBasis>(setup: &Setup<B>, cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let start = Instant::now();
    let r = cfg.noise.rel_level;
    let est = setup.fit(r, 0.0, cfg.mask_granularity, cfg.seed)?;
    let errors = setup.accuracy_errors(&est, r, cfg.seed, ExperimentKind::Accuracy.stream_id(), cfg.trials)?;
    Ok(vec![ResultRow::from_errors("accuracy", &setup.potential, "noise", r, &errors, start.elapsed().as_secs_f64())])
}

fn masking_rows<B: SpectralBasis>(setup: &Setup<B>, cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let r = cfg.noise.rel_level;
    cfg.mask_p
        .iter()
        .map(|&p| {
            let start = Instant::now();
            let est = setup.fit(r, p, cfg.mask_granularity, cfg.seed)?;
            let errors = setup.accuracy_errors(&est, r, cfg.seed, ExperimentKind::Masking.stream_id(), cfg.trials)?;
            Ok(ResultRow::from_errors("masking", &setup.potential, "p", p, &errors, start.elapsed().as_secs_f64()))
        })
        .collect()
}

fn timegen_rows<B: SpectralBasis>(setup: &Setup<B>, cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let start = Instant::now();
    let r = cfg.noise.rel_level;
    let est = setup.fit(r, 0.0, cfg.mask_granularity, cfg.seed)?;
    let per_q = setup.timegen_errors(&est, r, cfg.seed, &cfg.q_list, cfg.trials)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(cfg
        .q_list
        .iter()
        .zip(per_q)
        .map(|(&q, errors)| ResultRow::from_errors("timegen", &setup.potential, "q", q as f64, &errors, seconds))
        .collect())
}

pub fn run_accuracy(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    if cfg.is_sphere() {
        accuracy_rows(&sphere_setup(cfg)?, cfg)
    } else {
        accuracy_rows(&torus_setup(cfg)?, cfg)
    }
}

pub fn run_masking(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    if cfg.is_sphere() {
        masking_rows(&sphere_setup(cfg)?, cfg)
    } else {
        masking_rows(&torus_setup(cfg)?, cfg)
    }
}

pub fn run_timegen(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    if cfg.is_sphere() {
        timegen_rows(&sphere_setup(cfg)?, cfg)
    } else {
        timegen_rows(&torus_setup(cfg)?, cfg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceOutcome {
    pub rows: Vec<ResultRow>,
    /// Least-squares slope of `log mean error` against `log n`.
    pub slope: f64,
}

/// Noiseless fits of growing budget, grown incrementally, evaluated on
/// full-band test fields. The free particle uses the closed-form solver.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceOutcome> {
    let grid = cfg.grid.build()?;
    let potential = Potential::from_config(&cfg.potential, cfg.params.as_ref(), &grid)?;
    let oracle: Oracle<Field> = match potential {
        Potential::Free => Arc::new(FreeExactSolver::from_config(&cfg.solver)),
        _ => Arc::new(SplitStepSolver::new(&grid, &potential, cfg.solver)?),
    };
    let sid = ExperimentKind::Convergence.stream_id();
    let tests = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let psi = sample_grf(&cfg.grf, &grid, &mut trial_stream(cfg.seed, sid, t, tag::GRF_TEST))?;
            let truth = oracle.query(&psi)?;
            Ok((psi, truth))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    let mut est: Option<Estimator<TorusBasis>> = None;
    for &n in &cfg.n_list {
        let start = Instant::now();
        let basis = TorusBasis::for_budget(&grid, n)?;
        let next = match &est {
            None => fit(&oracle, &basis, FitConfig::noiseless(Setup::<TorusBasis>::fit_seed(cfg.seed)))?,
            Some(prev) => prev.update(&oracle, basis.k_max())?.0,
        };
        let errors = tests
            .par_iter()
            .map(|(psi, truth)| relative_error(&next.apply(psi)?, truth))
            .collect::<Result<Vec<f64>>>()?;
        let errors = finite(errors, "convergence")?;
        rows.push(ResultRow::from_errors("convergence", potential.name(), "n", n as f64, &errors, start.elapsed().as_secs_f64()));
        est = Some(next);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.param_value.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_rel_err.max(f64::MIN_POSITIVE).ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    Ok(ConvergenceOutcome { rows, slope })
}

/// Adversarial-solver fits on the hard test function over `n_list ×
/// s_list × eps_list`. One row per point; the error is absolute (the test
/// function has unit norm).
pub fn run_lowerbound(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let grid = cfg.grid.build()?;
    let mut rows = Vec::new();
    for &s in &cfg.s_list {
        for &eps in &cfg.eps_list {
            for &n in &cfg.n_list {
                let start = Instant::now();
                let p = lowerbound_point(&grid, n, s, eps, cfg.solver.t_final)?;
                rows.push(ResultRow {
                    experiment: "lowerbound".into(),
                    potential: "free_particle".into(),
                    param_name: format!("n|s={s}|eps={eps}"),
                    param_value: n as f64,
                    mean_rel_err: p.measured_error,
                    std_rel_err: 0.0,
                    trials: 1,
                    seconds: start.elapsed().as_secs_f64(),
                });
            }
        }
    }
    Ok(rows)
}

/// Dispatches on `cfg.experiment`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Accuracy => run_accuracy(cfg),
        ExperimentKind::Masking => run_masking(cfg),
        ExperimentKind::Timegen => run_timegen(cfg),
        ExperimentKind::Convergence => Ok(run_convergence(cfg)?.rows),
        ExperimentKind::Lowerbound => run_lowerbound(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::harness::GrfSpec;

    fn small(experiment: ExperimentKind, potential: &str) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            potential: potential.into(),
            grid: GridSpec { d: 2, n: 32, length: 2.0 * std::f64::consts::PI },
            budget: 81,
            trials: 8,
            q_list: vec![1, 2, 4],
            n_list: vec![9, 25, 81],
            seed: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn noiseless_band_limited_accuracy_is_exact() {
        for pot in ["free_particle", "harmonic_oscillator", "paul_trap"] {
            let cfg = ExperimentConfig {
                noise: crate::harness::NoiseSpec { rel_level: 0.0 },
                grf: GrfSpec::band_limited(4),
                ..small(ExperimentKind::Accuracy, pot)
            };
            let rows = run(&cfg).unwrap();
            assert!(rows[0].mean_rel_err < 1e-10, "{pot}: {:?}", rows[0]);
        }
    }

    #[test]
    fn noiseless_full_band_error_is_the_tail() {
        let cfg = ExperimentConfig {
            noise: crate::harness::NoiseSpec { rel_level: 0.0 },
            ..small(ExperimentKind::Accuracy, "free_particle")
        };
        let setup = torus_setup(&cfg).unwrap();
        let est = setup.fit(0.0, 0.0, MaskGranularity::PerDataset, cfg.seed).unwrap();
        let errors = setup.accuracy_errors(&est, 0.0, cfg.seed, 1, cfg.trials).unwrap();
        for (t, e) in errors.iter().enumerate() {
            let psi = setup.sample(&mut trial_stream(cfg.seed, 1, t as u64, tag::GRF_TEST)).unwrap();
            let truth = setup.oracle.query(&psi).unwrap();
            let tail = truth.forward_coeffs();
            let out_of_band: f64 = tail
                .iter()
                .filter(|(k, _)| crate::grid::freq_inf_norm(*k) > 4)
                .map(|(_, c)| c.norm_sqr())
                .sum();
            let expected = out_of_band.sqrt() / crate::GridFunction::l2_norm(&truth);
            assert!((e - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn masking_at_zero_reproduces_accuracy() {
        let acc = run(&small(ExperimentKind::Accuracy, "barrier")).unwrap();
        let mask = run(&ExperimentConfig {
            mask_p: vec![0.0],
            ..small(ExperimentKind::Masking, "barrier")
        })
        .unwrap();
        assert_eq!(acc[0].mean_rel_err, mask[0].mean_rel_err);
        assert_eq!(acc[0].std_rel_err, mask[0].std_rel_err);
    }

    #[test]
    fn deterministic_rows() {
        let cfg = small(ExperimentKind::Timegen, "shaken_lattice");
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        let strip = |rows: Vec<ResultRow>| rows.into_iter().map(|r| ResultRow { seconds: 0.0, ..r }).collect::<Vec<_>>();
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn exact_free_timegen_is_exact() {
        let cfg = ExperimentConfig {
            noise: crate::harness::NoiseSpec { rel_level: 0.0 },
            grf: GrfSpec::band_limited(4),
            ..small(ExperimentKind::Timegen, "free_particle")
        };
        let rows = run(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.mean_rel_err < 1e-9), "{rows:?}");
    }

    #[test]
    fn convergence_decreases() {
        let out = run_convergence(&small(ExperimentKind::Convergence, "free_particle")).unwrap();
        assert!(out.rows.windows(2).all(|w| w[1].mean_rel_err <= w[0].mean_rel_err));
        assert!(out.slope < -1.0, "{}", out.slope);
    }

    #[test]
    fn sphere_accuracy_runs() {
        let cfg = ExperimentConfig {
            trials: 4,
            ..small(ExperimentKind::Accuracy, "dipole")
        };
        let rows = run(&cfg).unwrap();
        assert!(rows[0].mean_rel_err < 1e-2);
    }
}
