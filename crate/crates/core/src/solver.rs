//! Second-order split-step pseudospectral propagation on the torus.
//!
//! One step of length `dt` is `e^{-iV dt/2ħ} · e^{-iħ|κ|²dt/2m} · e^{-iV dt/2ħ}`
//! (Strang splitting), with the kinetic factor diagonal in Fourier space,
//! `κ = 2πk/L`. Time-dependent potentials are sampled at the step midpoint.
//! Every factor has unit modulus, so the discrete L² norm is preserved.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::estimator::QueryOracle;
use crate::grid::{Field, Grid};
use crate::potentials::Potential;
use crate::{Error, GridFunction, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    #[serde(rename = "T", alias = "t_final")]
    pub t_final: f64,
    pub dt: f64,
    pub t_start: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            t_final: 0.1,
            dt: 0.001,
            t_start: 0.0,
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

impl SolverConfig {
    /// `T` with the default `dt = T/100`.
    pub fn with_final_time(t_final: f64) -> Self {
        SolverConfig {
            t_final,
            dt: t_final / 100.0,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.t_final, self.dt, self.t_start, self.hbar, self.mass]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("solver parameters must be finite"));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_final) {
            return Err(Error::config(format!(
                "need 0 < dt <= T, got dt = {}, T = {}",
                self.dt, self.t_final
            )));
        }
        let ratio = self.t_final / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::config("T/dt must be a whole number of steps"));
        }
        if !(self.hbar > 0.0 && self.mass > 0.0) {
            return Err(Error::config("hbar and mass must be positive"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// The configuration for the `j`-th consecutive window of length `T`
    /// (`j ≥ 1`), continuing physical time from `t_start + (j-1)T`.
    pub fn window(&self, j: usize) -> SolverConfig {
        SolverConfig {
            t_start: self.t_start + (j.saturating_sub(1)) as f64 * self.t_final,
            ..*self
        }
    }
}

#[derive(Clone, Debug)]
enum PotentialPhases {
    None,
    /// `e^{-iV dt/2ħ}` shared by every step.
    Static(Vec<C64>),
    /// One half-step phase per step, sampled at the step midpoint.
    PerStep(Vec<Vec<C64>>),
}

/// A precomputed evolution over `[t_start, t_start + T]` for one potential.
///
/// Building the phase tables once and reusing them across many inputs is
/// what makes fitting (hundreds of solves) affordable.
#[derive(Clone, Debug)]
pub struct Propagator {
    grid: Grid,
    config: SolverConfig,
    potential_name: &'static str,
    /// Kinetic phase per coefficient offset, with the FFT normalisation `1/N`
    /// folded in.
    kinetic: Vec<C64>,
    phases: PotentialPhases,
}

fn unit_phases(values: &[f64], factor: f64) -> Vec<C64> {
    values.iter().map(|v| C64::from_polar(1.0, -v * factor)).collect()
}

impl Propagator {
    pub fn new(grid: &Grid, potential: &Potential, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let dt = config.dt;
        let steps = config.steps();
        let norm = 1.0 / grid.len() as f64;
        let kinetic = grid
            .wavenumbers_sq()
            .into_iter()
            .map(|k2| C64::from_polar(norm, -config.hbar * k2 * dt / (2.0 * config.mass)))
            .collect();
        let half = dt / (2.0 * config.hbar);
        let phases = if potential.is_zero() {
            // Evaluate anyway so dimension errors surface here.
            potential.evaluate(grid, config.t_start)?;
            PotentialPhases::None
        } else if potential.is_time_dependent() {
            let tables = (0..steps)
                .map(|s| {
                    let t_mid = config.t_start + (s as f64 + 0.5) * dt;
                    potential.evaluate(grid, t_mid).map(|v| unit_phases(&v, half))
                })
                .collect::<Result<Vec<_>>>()?;
            PotentialPhases::PerStep(tables)
        } else {
            PotentialPhases::Static(unit_phases(&potential.evaluate(grid, config.t_start)?, half))
        };
        Ok(Propagator {
            grid: grid.clone(),
            config,
            potential_name: potential.name(),
            kinetic,
            phases,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn potential_name(&self) -> &'static str {
        self.potential_name
    }

    pub fn evolve(&self, psi0: &Field) -> Result<Field> {
        if psi0.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = psi0.clone();
        self.evolve_in_place(out.values_mut());
        Ok(out)
    }

    /// Evolves raw grid values (row-major, same grid) in place.
    pub fn evolve_in_place(&self, psi: &mut [C64]) {
        for s in 0..self.config.steps() {
            self.step(psi, s, false);
        }
    }

    /// Applies the exact inverse of [`Propagator::evolve`]: conjugated
    /// factors in reverse order, i.e. evolution by `-T`.
    pub fn evolve_reverse(&self, psi: &Field) -> Result<Field> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = psi.clone();
        for s in (0..self.config.steps()).rev() {
            self.step(out.values_mut(), s, true);
        }
        Ok(out)
    }

    fn half_phase(&self, step: usize) -> Option<&[C64]> {
        match &self.phases {
            PotentialPhases::None => None,
            PotentialPhases::Static(p) => Some(p),
            PotentialPhases::PerStep(p) => Some(&p[step]),
        }
    }

    fn step(&self, psi: &mut [C64], step: usize, reverse: bool) {
        let apply = |psi: &mut [C64], phase: &[C64]| {
            if reverse {
                psi.iter_mut().zip(phase).for_each(|(v, p)| *v *= p.conj());
            } else {
                psi.iter_mut().zip(phase).for_each(|(v, p)| *v *= p);
            }
        };
        let half = self.half_phase(step);
        if let Some(p) = half {
            apply(psi, p);
        }
        // The kinetic multiplier depends on |k|² only, so it can act on the
        // transposed spectrum.
        self.grid.forward_fft_transposed(psi);
        apply(psi, &self.kinetic);
        self.grid.inverse_fft_from_transposed(psi);
        if let Some(p) = half {
            apply(psi, p);
        }
    }
}

/// One-shot evolution; builds a [`Propagator`] internally.
pub fn evolve(psi0: &Field, potential: &Potential, config: SolverConfig) -> Result<Field> {
    Propagator::new(psi0.grid(), potential, config)?.evolve(psi0)
}

/// The free propagator `η_k = exp(-iħ(2π|k|/L)² T / 2m)` applied exactly in
/// coefficient space.
pub fn free_exact(psi0: &Field, t: f64, hbar: f64, mass: f64) -> Field {
    let mut coeffs = psi0.forward_coeffs();
    let grid = psi0.grid().clone();
    for (c, k2) in coeffs.entries_mut().iter_mut().zip(grid.wavenumbers_sq()) {
        *c *= C64::from_polar(1.0, -hbar * k2 * t / (2.0 * mass));
    }
    coeffs.inverse_coeffs()
}

/// The multiplier `η_k` for a single mode on a grid of length `length`.
pub fn free_phase(k: [i64; 2], length: f64, t: f64, hbar: f64, mass: f64) -> C64 {
    let kappa = 2.0 * PI / length;
    let k2 = kappa * kappa * (k[0] * k[0] + k[1] * k[1]) as f64;
    C64::from_polar(1.0, -hbar * k2 * t / (2.0 * mass))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub dts: Vec<f64>,
    /// Relative L² error against the reference at each `dt`.
    pub errors: Vec<f64>,
    pub reference_dt: f64,
    /// Least-squares slope of `log error` against `log dt`.
    pub order: f64,
}

/// Self-convergence study: errors against a reference solution computed
/// with `min(dt_list)/8`, and the fitted log-log slope.
pub fn convergence_order(
    psi0: &Field,
    potential: &Potential,
    config: SolverConfig,
    dt_list: &[f64],
) -> Result<ConvergenceReport> {
    if dt_list.len() < 3 {
        return Err(Error::config("convergence_order needs at least 3 dt values"));
    }
    let dt_min = dt_list.iter().copied().fold(f64::INFINITY, f64::min);
    let reference_dt = dt_min / 8.0;
    let reference = evolve(psi0, potential, SolverConfig { dt: reference_dt, ..config })?;
    let ref_norm = reference.l2_norm();
    let errors = dt_list
        .iter()
        .map(|&dt| {
            let approx = evolve(psi0, potential, SolverConfig { dt, ..config })?;
            Ok(approx.difference(&reference)?.l2_norm() / ref_norm)
        })
        .collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = dt_list.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
    Ok(ConvergenceReport {
        dts: dt_list.to_vec(),
        errors,
        reference_dt,
        order: least_squares_slope(&xs, &ys),
    })
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// The split-step solver as a query oracle.
#[derive(Clone, Debug)]
pub struct SplitStepSolver {
    propagator: Arc<Propagator>,
}

impl SplitStepSolver {
    pub fn new(grid: &Grid, potential: &Potential, config: SolverConfig) -> Result<Self> {
        Ok(SplitStepSolver {
            propagator: Arc::new(Propagator::new(grid, potential, config)?),
        })
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }
}

impl QueryOracle<Field> for SplitStepSolver {
    fn query(&self, input: &Field) -> Result<Field> {
        self.propagator.evolve(input)
    }

    fn describe(&self) -> String {
        let c = self.propagator.config();
        format!(
            "split_step potential={} T={} dt={} t_start={} hbar={} mass={}",
            self.propagator.potential_name(),
            c.t_final,
            c.dt,
            c.t_start,
            c.hbar,
            c.mass
        )
    }
}

/// The closed-form free propagator as a query oracle (solver accuracy zero).
#[derive(Clone, Copy, Debug)]
pub struct FreeExactSolver {
    pub t: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl FreeExactSolver {
    pub fn from_config(config: &SolverConfig) -> Self {
        FreeExactSolver {
            t: config.t_final,
            hbar: config.hbar,
            mass: config.mass,
        }
    }
}

impl QueryOracle<Field> for FreeExactSolver {
    fn query(&self, input: &Field) -> Result<Field> {
        Ok(free_exact(input, self.t, self.hbar, self.mass))
    }

    fn describe(&self) -> String {
        format!("free_exact T={} hbar={} mass={}", self.t, self.hbar, self.mass)
    }
}
