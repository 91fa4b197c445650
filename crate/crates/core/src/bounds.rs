//! Error bounds for the estimator and the constructions that probe them.
//!
//! With budget `n`, smoothness `s`, dimension `d` and solver accuracy `ε`,
//! the one-step error on `ψ` is at most `‖ψ‖_{H^s}(ε γ_n + 3^s n^{-s/d})`,
//! where `γ_n² = Σ_{|k|∞ ≤ K_n} (1 + |k|²)^{-s}`. The adversarial solver
//! `P(u) = F(u) + ε φ_0` together with [`hard_test_function`] shows the
//! `ε γ_n` term cannot be avoided in general; mean-zero uncorrelated column
//! errors, in contrast, do not accumulate across modes.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimator::{fit, k_index, k_n, Estimator, FitConfig, FitMetadata, QueryOracle, SpectralBasis, TorusBasis};
use crate::grid::{freq_norm_sq, CoeffMap, Field, Freq, Grid};
use crate::harness::grf::{sample_grf_coeffs, GrfSpec};
use crate::rng::{self, tag};
use crate::solver::FreeExactSolver;
use crate::{Error, GridFunction, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: usize,
    pub s: f64,
    pub d: usize,
    pub eps: f64,
    pub hs_norm: f64,
    pub q: usize,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        k_n(self.n, self.d)?;
        if !(self.s > 0.0) || !(self.eps >= 0.0) || !(self.hs_norm >= 0.0) || self.q < 1 {
            return Err(Error::config("bound parameters need s > 0, eps ≥ 0, hs_norm ≥ 0, q ≥ 1"));
        }
        Ok(())
    }
}

/// Integer frequencies with `|k|∞ ≤ k_max` in dimension `d`.
fn band(k_max: i64, d: usize) -> impl Iterator<Item = Freq> {
    let second = if d == 2 { k_max } else { 0 };
    (-k_max..=k_max).flat_map(move |a| (-second..=second).map(move |b| [a, b]))
}

/// `γ_n = sqrt(Σ_{|k|∞ ≤ ⌊K_n⌋} (1 + |k|²)^{-s})`, the exact finite sum.
pub fn gamma_n(n: usize, s: f64, d: usize) -> Result<f64> {
    let k = k_index(n, d)?;
    Ok(band(k, d).map(|f| (1.0 + freq_norm_sq(f)).powf(-s)).sum::<f64>().sqrt())
}

/// `‖ψ‖_{H^s} (ε γ_n + 3^s n^{-s/d})`.
pub fn upper_bound(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    let g = gamma_n(p.n, p.s, p.d)?;
    Ok(p.hs_norm * (p.eps * g + 3f64.powf(p.s) * (p.n as f64).powf(-p.s / p.d as f64)))
}

/// `q` times the one-step bound for a constant potential. `measured_one_step`
/// replaces the analytic one-step bound when given.
pub fn timegen_bound_constant_v(p: &BoundParams, measured_one_step: Option<f64>) -> Result<f64> {
    let one = match measured_one_step {
        Some(v) => v,
        None => upper_bound(p)?,
    };
    Ok(p.q as f64 * one)
}

/// `free_exact(u, T) + ε φ_0`.
pub fn adversarial_solver(u: &Field, eps: f64, t: f64) -> Result<Field> {
    AdversarialSolver {
        exact: FreeExactSolver { t, hbar: 1.0, mass: 1.0 },
        eps,
    }
    .query(u)
}

/// The exact free flow shifted by `ε φ_0` on every query: `ε`-accurate with
/// equality, and maximally correlated across modes.
#[derive(Clone, Copy, Debug)]
pub struct AdversarialSolver {
    pub exact: FreeExactSolver,
    pub eps: f64,
}

impl QueryOracle<Field> for AdversarialSolver {
    fn query(&self, input: &Field) -> Result<Field> {
        let mut out = self.exact.query(input)?;
        let shift = Field::fourier_mode(input.grid(), [0, 0])?.scaled(C64::new(self.eps, 0.0));
        out.add_assign(&shift)?;
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("adversarial eps={} over {}", self.eps, self.exact.describe())
    }
}

/// A unitary `ε`-accurate solver: rotates each Fourier coefficient of the
/// input by a fixed phase `±θ` with `|e^{iθ} − 1| = ε`, then applies `base`.
#[derive(Clone, Debug)]
pub struct PhasePerturbedSolver<O> {
    pub base: O,
    pub eps: f64,
    pub seed: u64,
}

impl<O> PhasePerturbedSolver<O> {
    fn phase(&self, k: Freq) -> C64 {
        let theta = 2.0 * (self.eps / 2.0).asin();
        let sign = if rng::derive_seed(self.seed, &[tag::COLUMN_NOISE, rng::index_key(k)]) & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        C64::from_polar(1.0, sign * theta)
    }
}

impl<O: QueryOracle<Field>> QueryOracle<Field> for PhasePerturbedSolver<O> {
    fn query(&self, input: &Field) -> Result<Field> {
        let mut c = input.forward_coeffs();
        let grid = input.grid().clone();
        for (o, v) in c.entries_mut().iter_mut().enumerate() {
            *v *= self.phase(grid.freq_at(o));
        }
        self.base.query(&c.inverse_coeffs())
    }

    fn describe(&self) -> String {
        format!("phase_perturbed eps={} over {}", self.eps, self.base.describe())
    }
}

/// `max_k ‖P(φ_k) − F(φ_k)‖` over the band of `basis`.
pub fn measured_solver_eps<B: SpectralBasis>(
    solver: &impl QueryOracle<B::Field>,
    exact: &impl QueryOracle<B::Field>,
    basis: &B,
) -> Result<f64> {
    basis
        .queried_indices()
        .par_iter()
        .map(|&i| {
            let phi = basis.basis_function(i)?;
            Ok(solver.query(&phi)?.difference(&exact.query(&phi)?)?.l2_norm())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// The deterministic worst-case test function for budget `n`.
#[derive(Clone, Debug)]
pub struct HardTestFunction {
    pub field: Field,
    pub coeffs: CoeffMap,
    /// The single out-of-band mode, `|ℓ|∞ = ⌈K_n + 1⌉`.
    pub ell: Freq,
    pub c_ell: f64,
    /// `A_n = Σ_{0 < |k|∞ ≤ ⌊K_n⌋} (1 + |k|²)^{-s}`.
    pub a_n: f64,
}

impl HardTestFunction {
    /// `ε sqrt(A_n / 2)`, the solver-error part of the lower bound.
    pub fn solver_term(&self, eps: f64) -> f64 {
        eps * (self.a_n / 2.0).sqrt()
    }

    /// `c_ℓ`, the truncation part of the lower bound.
    pub fn tail_term(&self) -> f64 {
        self.c_ell
    }

    /// `(1/√2)(ε sqrt(A_n/2) + c_ℓ)`.
    pub fn lower_bound(&self, eps: f64) -> f64 {
        (self.solver_term(eps) + self.tail_term()) / 2f64.sqrt()
    }
}

/// Builds the test function: `c_k = (1+|k|²)^{-s}/sqrt(2A_n)` on the band
/// without the origin, `c_ℓ = 1/(√2 (1+|ℓ|²)^{s/2})` at
/// `ℓ = (−m, …, −m)`, `m = ⌈K_n + 1⌉` (the lexicographically smallest index
/// with `|ℓ|∞ = m`), and `c_0 ≥ 0` fixing the L² norm to one.
pub fn hard_test_function(n: usize, s: f64, grid: &Grid) -> Result<HardTestFunction> {
    let d = grid.dim();
    let k = k_index(n, d)?;
    let m = (k_n(n, d)? + 1.0).ceil() as i64;
    if m >= grid.nyquist() {
        return Err(Error::InvalidGrid(format!(
            "mode |ℓ|∞ = {m} needs more than {} points per axis",
            grid.n_per_dim()
        )));
    }
    let ell: Freq = if d == 2 { [-m, -m] } else { [-m, 0] };
    let a_n: f64 = band(k, d)
        .filter(|&f| f != [0, 0])
        .map(|f| (1.0 + freq_norm_sq(f)).powf(-s))
        .sum();
    let c_ell = 1.0 / (2f64.sqrt() * (1.0 + freq_norm_sq(ell)).powf(s / 2.0));
    let mut coeffs = CoeffMap::zeros(grid);
    let mut used = c_ell * c_ell;
    if a_n > 0.0 {
        for f in band(k, d).filter(|&f| f != [0, 0]) {
            let c = (1.0 + freq_norm_sq(f)).powf(-s) / (2.0 * a_n).sqrt();
            coeffs.set(f, C64::new(c, 0.0))?;
            used += c * c;
        }
    }
    coeffs.set(ell, C64::new(c_ell, 0.0))?;
    coeffs.set([0, 0], C64::new((1.0 - used).max(0.0).sqrt(), 0.0))?;
    Ok(HardTestFunction {
        field: coeffs.inverse_coeffs(),
        coeffs,
        ell,
        c_ell,
        a_n,
    })
}

/// One row of the lower-bound sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundPoint {
    pub n: usize,
    pub s: f64,
    pub d: usize,
    pub eps: f64,
    pub gamma_n: f64,
    pub upper: f64,
    pub lower_solver_term: f64,
    pub lower_tail_term: f64,
    pub measured_error: f64,
    /// Size of the error's `φ_0` component, `ε |Σ_{band} c_k|`.
    pub measured_eps_term: f64,
    pub hs_norm: f64,
}

/// Fits the estimator from the adversarial solver at budget `n` and measures
/// its error on the hard test function.
pub fn lowerbound_point(grid: &Grid, n: usize, s: f64, eps: f64, t: f64) -> Result<LowerBoundPoint> {
    let exact = FreeExactSolver { t, hbar: 1.0, mass: 1.0 };
    let solver = AdversarialSolver { exact, eps };
    let basis = TorusBasis::for_budget(grid, n)?;
    let est = fit(&solver, &basis, FitConfig::noiseless(0))?;
    let test = hard_test_function(n, s, grid)?;
    let err = est.apply(&test.field)?.difference(&exact.query(&test.field)?)?;
    let eps_term = err.forward_coeffs().get([0, 0])?.norm();
    let hs_norm = test.field.sobolev_norm(s);
    let d = grid.dim();
    Ok(LowerBoundPoint {
        n,
        s,
        d,
        eps,
        gamma_n: gamma_n(n, s, d)?,
        upper: upper_bound(&BoundParams { n, s, d, eps, hs_norm, q: 1 })?,
        lower_solver_term: test.solver_term(eps),
        lower_tail_term: test.tail_term(),
        measured_error: err.l2_norm(),
        measured_eps_term: eps_term,
        hs_norm,
    })
}

/// One budget of the uncorrelated-noise sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepPoint {
    pub n: usize,
    /// Sup error over the test set, averaged over draws.
    pub mean_sup_error: f64,
    pub std_error: f64,
    pub draws: usize,
}

/// Free-flow estimator with exact columns plus independent white Gaussian
/// column errors `δ_k`, `E‖δ_k‖² = ε²`, evaluated on a fixed test set of GRF
/// draws normalised to unit `H^s` norm.
pub fn uncorrelated_noise_sweep(
    grid: &Grid,
    ns: &[usize],
    s: f64,
    eps: f64,
    t: f64,
    draws: usize,
    test_count: usize,
    seed: u64,
) -> Result<Vec<NoiseSweepPoint>> {
    let exact = FreeExactSolver { t, hbar: 1.0, mass: 1.0 };
    let tests = (0..test_count as u64)
        .map(|i| {
            let c = sample_grf_coeffs(&GrfSpec::default(), grid, &mut rng::stream(seed, &[tag::TEST_SET, i]))?;
            let f = c.inverse_coeffs();
            let norm = f.sobolev_norm(s);
            Ok(f.scaled(C64::new(1.0 / norm, 0.0)))
        })
        .collect::<Result<Vec<Field>>>()?;
    let truths = tests.iter().map(|f| exact.query(f)).collect::<Result<Vec<_>>>()?;
    let len = grid.len();
    let sigma = eps / (2.0 * len as f64).sqrt();
    ns.iter()
        .map(|&n| {
            let basis = TorusBasis::for_budget(grid, n)?;
            let clean = fit(&exact, &basis, FitConfig::noiseless(seed))?;
            let errors = (0..draws as u64)
                .into_par_iter()
                .map(|draw| {
                    let mut r = rng::stream(seed, &[tag::COLUMN_NOISE, n as u64, draw]);
                    let columns = clean
                        .columns()
                        .iter()
                        .map(|col| {
                            col.iter()
                                .map(|c| c + C64::new(r.sample(StandardNormal), r.sample(StandardNormal)) * sigma)
                                .collect()
                        })
                        .collect();
                    let noisy = Estimator::from_columns(
                        basis.clone(),
                        columns,
                        FitMetadata {
                            solver: "free_exact + white column noise".into(),
                            fit: FitConfig::noiseless(seed),
                        },
                    )?;
                    tests.iter().zip(&truths).try_fold(0.0f64, |acc, (psi, truth)| {
                        Ok(acc.max(noisy.apply(psi)?.difference(truth)?.l2_norm()))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, std) = crate::harness::mean_std(&errors);
            Ok(NoiseSweepPoint {
                n,
                mean_sup_error: mean,
                std_error: std / (draws as f64).sqrt(),
                draws,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolverConfig;
    use crate::grid::freq_inf_norm;
    use std::f64::consts::PI;

    fn torus(n: usize) -> Grid {
        Grid::new(2, n, 2.0 * PI).unwrap()
    }

    #[test]
    fn gamma_hand_values() {
        assert!((gamma_n(3, 1.0, 1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        // K = 1, d = 2, s = 1: 1 + 4/2 + 4/3.
        assert!((gamma_n(9, 1.0, 2).unwrap() - (1.0 + 2.0 + 4.0 / 3.0f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn gamma_monotonicity_and_regime() {
        let ns = [9, 25, 81, 289, 1089, 4225];
        for w in ns.windows(2) {
            assert!(gamma_n(w[1], 1.0, 2).unwrap() >= gamma_n(w[0], 1.0, 2).unwrap());
        }
        for &n in &ns {
            assert!(gamma_n(n, 2.0, 2).unwrap() <= gamma_n(n, 1.0, 2).unwrap());
        }
        let ratios: Vec<f64> = ns.iter().map(|&n| gamma_n(n, 0.5, 2).unwrap() / (n as f64).powf(0.25)).collect();
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi / lo < 2.0, "{ratios:?}");
    }

    #[test]
    fn upper_bound_cases() {
        let p = BoundParams { n: 81, s: 2.0, d: 2, eps: 0.0, hs_norm: 1.5, q: 1 };
        assert!((upper_bound(&p).unwrap() - 1.5 * 9.0 / 81.0).abs() < 1e-14);
        assert_eq!(upper_bound(&BoundParams { hs_norm: 0.0, ..p }).unwrap(), 0.0);
        let with_eps = BoundParams { eps: 1e-2, ..p };
        let ns = [9, 25, 81, 289, 1089];
        let vals: Vec<f64> = ns.iter().map(|&n| upper_bound(&BoundParams { n, ..with_eps }).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(timegen_bound_constant_v(&p, None).unwrap(), upper_bound(&p).unwrap());
        let p16 = BoundParams { q: 16, ..p };
        assert!((timegen_bound_constant_v(&p16, None).unwrap() - 16.0 * 1.5 * 9.0 / 81.0).abs() < 1e-13);
        assert!(upper_bound(&BoundParams { n: 4, ..p }).is_err());
    }

    #[test]
    fn adversarial_solver_shape() {
        let g = torus(16);
        let phi0 = Field::fourier_mode(&g, [0, 0]).unwrap();
        let out = adversarial_solver(&phi0, 0.01, 0.1).unwrap();
        assert!(out.difference(&phi0.clone().scaled(C64::new(1.01, 0.0))).unwrap().l2_norm() < 1e-14);
        let basis = TorusBasis::new(&g, 3).unwrap();
        let exact = FreeExactSolver { t: 0.1, hbar: 1.0, mass: 1.0 };
        let adv = AdversarialSolver { exact, eps: 0.01 };
        let eps = measured_solver_eps(&adv, &exact, &basis).unwrap();
        assert!((eps - 0.01).abs() < 1e-14);
        let est = fit(&adv, &basis, FitConfig::noiseless(0)).unwrap();
        let clean = fit(&exact, &basis, FitConfig::noiseless(0)).unwrap();
        let zero = g.freq_offset([0, 0]).unwrap();
        for (a, b) in est.columns().iter().zip(clean.columns()) {
            assert!((a[zero] - b[zero] - 0.01).norm() < 1e-14);
            let rest: f64 = a.iter().zip(b).enumerate().filter(|(i, _)| *i != zero).map(|(_, (x, y))| (x - y).norm()).sum();
            assert!(rest < 1e-12);
        }
    }

    #[test]
    fn hard_function_properties() {
        let g = torus(64);
        for &n in &[9, 81, 1089] {
            for &s in &[0.5, 1.0, 2.0] {
                let h = hard_test_function(n, s, &g).unwrap();
                assert!((h.field.l2_norm() - 1.0).abs() < 1e-12);
                assert!(h.field.sobolev_norm(s) <= 2.0);
                assert!(h.coeffs.iter().all(|(_, c)| c.im == 0.0 && c.re >= 0.0));
                assert_eq!(freq_inf_norm(h.ell), k_index(n, 2).unwrap() + 1);
            }
        }
        assert!(hard_test_function(1089, 1.0, &torus(32)).is_err());
    }

    #[test]
    fn lower_bound_realised_and_sandwiched() {
        let g = torus(64);
        for &n in &[9, 81, 1089] {
            let p = lowerbound_point(&g, n, 1.0, 1e-2, 0.1).unwrap();
            let h = hard_test_function(n, 1.0, &g).unwrap();
            let band_sum: f64 = h.coeffs.iter().filter(|(k, _)| freq_inf_norm(*k) <= k_index(n, 2).unwrap()).map(|(_, c)| c.re).sum();
            let identity = (1e-4 * band_sum * band_sum + h.c_ell * h.c_ell).sqrt();
            assert!((p.measured_error - identity).abs() < 1e-12, "{p:?}");
            assert!(p.measured_error >= h.lower_bound(1e-2));
            assert!(p.measured_error <= p.upper);
        }
    }

    #[test]
    fn degraded_free_solver_respects_upper_bound() {
        let g = torus(32);
        let exact = FreeExactSolver::from_config(&SolverConfig::default());
        let perturbed = PhasePerturbedSolver { base: exact, eps: 1e-2, seed: 3 };
        let adversarial = AdversarialSolver { exact, eps: 1e-2 };
        for &n in &[9, 81, 289] {
            let basis = TorusBasis::for_budget(&g, n).unwrap();
            let e1 = fit(&perturbed, &basis, FitConfig::noiseless(0)).unwrap();
            let e2 = fit(&adversarial, &basis, FitConfig::noiseless(0)).unwrap();
            let eps1 = measured_solver_eps(&perturbed, &exact, &basis).unwrap();
            let eps2 = measured_solver_eps(&adversarial, &exact, &basis).unwrap();
            assert!((eps1 - 1e-2).abs() < 1e-12);
            for seed in 0..5 {
                let psi = crate::harness::grf::sample_grf(&GrfSpec::default(), &g, &mut rng::stream(seed, &[tag::GRF_TEST])).unwrap();
                let truth = exact.query(&psi).unwrap();
                for s in [1.0, 2.0] {
                    let hs = psi.sobolev_norm(s);
                    for (est, eps) in [(&e1, eps1), (&e2, eps2)] {
                        let err = est.apply(&psi).unwrap().difference(&truth).unwrap().l2_norm();
                        let bound = upper_bound(&BoundParams { n, s, d: 2, eps, hs_norm: hs, q: 1 }).unwrap();
                        assert!(err <= bound, "n={n} s={s} err={err} bound={bound}");
                    }
                }
            }
        }
    }

    #[test]
    fn phase_perturbed_solver_is_unitary() {
        let g = torus(16);
        let exact = FreeExactSolver::from_config(&SolverConfig::default());
        let p = PhasePerturbedSolver { base: exact, eps: 0.05, seed: 1 };
        let psi = crate::harness::grf::sample_grf(&GrfSpec::default(), &g, &mut rng::stream(4, &[])).unwrap();
        assert!((p.query(&psi).unwrap().l2_norm() - psi.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_noise_does_not_accumulate() {
        let g = torus(32);
        let pts = uncorrelated_noise_sweep(&g, &[9, 81, 225], 0.5, 1e-2, 0.1, 8, 4, 1).unwrap();
        assert!(pts.last().unwrap().mean_sup_error <= 1.5 * pts[0].mean_sup_error, "{pts:?}");
    }
}
