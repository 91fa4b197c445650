//! Command-line front end: experiments, the reference solver, and fitting,
//! evaluating and powering estimators stored on disk.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use oplearn::bounds::{lowerbound_point, LowerBoundPoint};
use oplearn::estimator::{fit, AnyEstimator, FitConfig};
use oplearn::harness::experiments::{self, sphere_setup, torus_setup, Setup};
use oplearn::harness::{save_rows, write_rows, ExperimentConfig, ExperimentKind};
use oplearn::io::{read_any_field, save_any_field, AnyField};
use oplearn::potentials::Potential;
use oplearn::solver::Propagator;
use oplearn::sphere::{SpherePotential, SpherePropagator};
use oplearn::{Error, GridFunction};

#[derive(Parser)]
#[command(name = "oplearn", version, about = "Spectral operator learning for the Schrödinger evolution operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; stdout when absent and the config names none.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Table of mean relative errors at the configured noise level.
    Accuracy(RunArgs),
    /// Accuracy with randomly zeroed response coefficients.
    Masking(RunArgs),
    /// Repeated application against the true flow.
    Timegen(RunArgs),
    /// Noiseless error as the sample budget grows.
    Convergence(RunArgs),
    /// Adversarial-solver sweep on the hard test function.
    Lowerbound(RunArgs),
    /// Evolves a field file with the reference solver.
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fits an estimator and stores it.
    Fit {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Masking probability for the stored fit.
        #[arg(long, default_value_t = 0.0)]
        mask_p: f64,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Applies a stored estimator to a field file.
    Eval {
        #[arg(long)]
        estimator: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Applies a stored estimator `steps` times.
    Power {
        #[arg(long)]
        estimator: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        steps: usize,
    },
    /// Bound evaluators and the measured adversarial error, as CSV.
    Bounds {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> oplearn::Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn set_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn run_experiment(kind: ExperimentKind, args: &RunArgs) -> anyhow::Result<()> {
    set_threads(args.threads)?;
    let mut cfg = load_config(args.config.as_deref())?;
    cfg.experiment = kind;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let rows = if kind == ExperimentKind::Convergence {
        let out = experiments::run_convergence(&cfg)?;
        eprintln!("fitted log-log slope: {:.4}", out.slope);
        out.rows
    } else {
        experiments::run(&cfg)?
    };
    match args.out.as_ref().or(cfg.output.as_ref()) {
        Some(path) => save_rows(&rows, path)?,
        None => write_rows(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn ensure_finite<F: GridFunction>(f: &F) -> oplearn::Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical("output contains NaN or Inf".into()))
    }
}

fn solve(config: Option<&Path>, input: &Path, out: &Path) -> anyhow::Result<()> {
    let cfg = load_config(config)?;
    let result = match read_any_field(input)? {
        AnyField::Torus(f) => {
            let p = Potential::from_config(&cfg.potential, cfg.params.as_ref(), f.grid())?;
            AnyField::Torus(Propagator::new(f.grid(), &p, cfg.solver)?.evolve(&f)?)
        }
        AnyField::Sphere(f) => {
            let p = SpherePotential::from_config(&cfg.potential, cfg.params.as_ref())?;
            AnyField::Sphere(SpherePropagator::new(f.grid(), &p, cfg.solver)?.evolve(&f)?)
        }
    };
    match &result {
        AnyField::Torus(f) => ensure_finite(f)?,
        AnyField::Sphere(f) => ensure_finite(f)?,
    }
    save_any_field(&result, out)?;
    Ok(())
}

fn fit_command(config: Option<&Path>, out: &Path, seed: Option<u64>, mask_p: f64) -> anyhow::Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let r = cfg.noise.rel_level;
    if cfg.is_sphere() {
        let setup = sphere_setup(&cfg)?;
        setup.fit(r, mask_p, cfg.mask_granularity, cfg.seed)?.save(out)?;
    } else {
        let setup = torus_setup(&cfg)?;
        let config = FitConfig {
            noise_rel: r,
            mask_p,
            mask_granularity: cfg.mask_granularity,
            seed: Setup::<oplearn::estimator::TorusBasis>::fit_seed(cfg.seed),
        };
        fit(&setup.oracle, &setup.basis, config)?.save(out)?;
    }
    Ok(())
}

fn apply_command(estimator: &Path, input: &Path, out: &Path, steps: usize) -> anyhow::Result<()> {
    if steps == 0 {
        return Err(Error::InvalidConfig("steps must be at least 1".into()).into());
    }
    let result = match (AnyEstimator::load(estimator)?, read_any_field(input)?) {
        (AnyEstimator::Torus(e), AnyField::Torus(f)) => {
            let r = e.apply_power(&f, steps)?;
            ensure_finite(&r)?;
            AnyField::Torus(r)
        }
        (AnyEstimator::Sphere(e), AnyField::Sphere(f)) => {
            let r = e.apply_power(&f, steps)?;
            ensure_finite(&r)?;
            AnyField::Sphere(r)
        }
        _ => return Err(Error::InvalidConfig("estimator and field live on different domains".into()).into()),
    };
    save_any_field(&result, out)?;
    Ok(())
}

fn bounds_command(config: Option<&Path>, out: Option<&Path>) -> anyhow::Result<()> {
    let cfg = load_config(config)?;
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let mut points: Vec<LowerBoundPoint> = Vec::new();
    for &s in &cfg.s_list {
        for &eps in &cfg.eps_list {
            for &n in &cfg.n_list {
                points.push(lowerbound_point(&grid, n, s, eps, cfg.solver.t_final)?);
            }
        }
    }
    let sink: Box<dyn std::io::Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["n", "s", "d", "eps", "gamma_n", "upper", "lower_solver_term", "lower_tail_term", "measured_error"])?;
    for p in points {
        w.write_record([
            p.n.to_string(),
            p.s.to_string(),
            p.d.to_string(),
            p.eps.to_string(),
            format!("{:e}", p.gamma_n),
            format!("{:e}", p.upper),
            format!("{:e}", p.lower_solver_term),
            format!("{:e}", p.lower_tail_term),
            format!("{:e}", p.measured_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidConfig(_)) | Some(Error::InvalidGrid(_)) => 2,
        Some(Error::Numerical(_)) => 3,
        Some(Error::Query { source, .. }) if matches!(**source, Error::Numerical(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Accuracy(a) => run_experiment(ExperimentKind::Accuracy, a),
        Command::Masking(a) => run_experiment(ExperimentKind::Masking, a),
        Command::Timegen(a) => run_experiment(ExperimentKind::Timegen, a),
        Command::Convergence(a) => run_experiment(ExperimentKind::Convergence, a),
        Command::Lowerbound(a) => run_experiment(ExperimentKind::Lowerbound, a),
        Command::Solve { config, input, out } => solve(config.as_deref(), input, out),
        Command::Fit { config, out, seed, mask_p, threads } => {
            set_threads(*threads).and_then(|_| fit_command(config.as_deref(), out, *seed, *mask_p))
        }
        Command::Eval { estimator, input, out } => apply_command(estimator, input, out, 1),
        Command::Power { estimator, input, out, steps } => apply_command(estimator, input, out, *steps),
        Command::Bounds { config, out } => bounds_command(config.as_deref(), out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
