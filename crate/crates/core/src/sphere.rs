//! Spherical harmonics on an equiangular grid of the unit sphere, the
//! transform pair between grid values and `(ℓ, m)` coefficients, and the
//! split-step propagator on `S²`.
//!
//! `θ ∈ (0, π)` is cell-centred, `θ_j = (j + ½)π/n_θ`, and `φ_p = 2πp/n_φ`.
//! Quadrature uses Fejér's first rule in `cos θ` times the uniform rule in
//! `φ`; with `n_θ > 2ℓ_max` the Gram matrix of the band is the identity up to
//! roundoff. Harmonics are orthonormal with the Condon–Shortley phase and
//! `Y_ℓ^{-m} = (-1)^m conj(Y_ℓ^m)`. Field values are θ-row-major.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::estimator::QueryOracle;
use crate::field::GridFunction;
use crate::solver::SolverConfig;
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SphereGridSpec {
    pub n_phi: usize,
    pub n_theta: usize,
    pub l_max: usize,
}

impl Default for SphereGridSpec {
    fn default() -> Self {
        SphereGridSpec {
            n_phi: 64,
            n_theta: 32,
            l_max: 10,
        }
    }
}

impl SphereGridSpec {
    pub fn build(&self) -> Result<SphereGrid> {
        SphereGrid::new(self.n_phi, self.n_theta, self.l_max)
    }
}

struct Inner {
    spec: SphereGridSpec,
    thetas: Vec<f64>,
    /// Per-row quadrature weight (integrated over φ); sums to 4π.
    row_weights: Vec<f64>,
    /// Normalised associated Legendre values `P̄_ℓ^m(cos θ_j)` for `m ≥ 0`,
    /// indexed `[tri(ℓ, m) * n_theta + j]`.
    legendre: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Equiangular grid with a degree cutoff. Cheap to clone.
#[derive(Clone)]
pub struct SphereGrid {
    inner: Arc<Inner>,
}

impl fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereGrid")
            .field("n_phi", &self.n_phi())
            .field("n_theta", &self.n_theta())
            .field("l_max", &self.l_max())
            .finish()
    }
}

impl PartialEq for SphereGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.spec == other.inner.spec
    }
}

fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Fejér first-rule weights for `∫_{-1}^{1} g(cos θ) d(cos θ)` at the
/// cell-centred nodes; exact for polynomials of degree `< n`.
pub fn fejer_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let theta = (j as f64 + 0.5) * PI / n as f64;
            let s: f64 = (1..=n / 2)
                .map(|k| (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0))
                .sum();
            2.0 / n as f64 * (1.0 - 2.0 * s)
        })
        .collect()
}

/// `P̄_ℓ^m(cos θ)` for `0 ≤ m ≤ ℓ ≤ l_max`, normalised so that
/// `P̄_ℓ^m(cos θ) e^{imφ}` is an orthonormal harmonic on the unit sphere.
fn legendre_table(l_max: usize, theta: f64) -> Vec<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    let mut p = vec![0.0; tri(l_max, l_max) + 1];
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=l_max {
        let mf = m as f64;
        p[tri(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[tri(m - 1, m - 1)];
    }
    for m in 0..l_max {
        p[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * c * p[tri(m, m)];
    }
    for m in 0..=l_max {
        for l in (m + 2)..=l_max {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[tri(l, m)] = a * (c * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
        }
    }
    p
}

impl SphereGrid {
    pub fn new(n_phi: usize, n_theta: usize, l_max: usize) -> Result<Self> {
        if l_max > 32 {
            return Err(Error::InvalidGrid(format!("l_max = {l_max} exceeds 32")));
        }
        if n_phi < 2 * l_max + 2 {
            return Err(Error::InvalidGrid(format!(
                "n_phi = {n_phi} cannot resolve |m| ≤ {l_max}; need at least {}",
                2 * l_max + 2
            )));
        }
        if n_theta <= 2 * l_max {
            return Err(Error::InvalidGrid(format!(
                "n_theta = {n_theta} must exceed 2·l_max = {}",
                2 * l_max
            )));
        }
        let thetas: Vec<f64> = (0..n_theta)
            .map(|j| (j as f64 + 0.5) * PI / n_theta as f64)
            .collect();
        let row_weights = fejer_weights(n_theta).into_iter().map(|w| 2.0 * PI * w).collect();
        let n_lm = tri(l_max, l_max) + 1;
        let mut legendre = vec![0.0; n_lm * n_theta];
        for (j, &t) in thetas.iter().enumerate() {
            for (i, v) in legendre_table(l_max, t).into_iter().enumerate() {
                legendre[i * n_theta + j] = v;
            }
        }
        let mut planner = FftPlanner::new();
        Ok(SphereGrid {
            inner: Arc::new(Inner {
                spec: SphereGridSpec { n_phi, n_theta, l_max },
                thetas,
                row_weights,
                legendre,
                forward: planner.plan_fft_forward(n_phi),
                inverse: planner.plan_fft_inverse(n_phi),
            }),
        })
    }

    pub fn spec(&self) -> SphereGridSpec {
        self.inner.spec
    }

    pub fn n_phi(&self) -> usize {
        self.inner.spec.n_phi
    }

    pub fn n_theta(&self) -> usize {
        self.inner.spec.n_theta
    }

    pub fn l_max(&self) -> usize {
        self.inner.spec.l_max
    }

    pub fn len(&self) -> usize {
        self.n_phi() * self.n_theta()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn thetas(&self) -> &[f64] {
        &self.inner.thetas
    }

    pub fn phis(&self) -> Vec<f64> {
        (0..self.n_phi())
            .map(|p| 2.0 * PI * p as f64 / self.n_phi() as f64)
            .collect()
    }

    /// Quadrature weight of each θ row, integrated over φ.
    pub fn row_weights(&self) -> &[f64] {
        &self.inner.row_weights
    }

    /// `(θ, φ)` of a θ-row-major offset.
    pub fn point(&self, offset: usize) -> (f64, f64) {
        let (j, p) = (offset / self.n_phi(), offset % self.n_phi());
        (self.inner.thetas[j], 2.0 * PI * p as f64 / self.n_phi() as f64)
    }

    /// Number of band-limited coefficients, `(l_max + 1)²`.
    pub fn coeff_len(&self) -> usize {
        (self.l_max() + 1) * (self.l_max() + 1)
    }

    /// All `(ℓ, m)` in coefficient order.
    pub fn indices(&self) -> Vec<(usize, i64)> {
        (0..=self.l_max())
            .flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
            .collect()
    }

    fn legendre(&self, l: usize, m: usize, j: usize) -> f64 {
        self.inner.legendre[tri(l, m) * self.n_theta() + j]
    }

    /// `θ`-dependent factor of `Y_ℓ^m`, including the sign for negative `m`.
    fn theta_factor(&self, l: usize, m: i64, j: usize) -> f64 {
        let p = self.legendre(l, m.unsigned_abs() as usize, j);
        if m < 0 && m % 2 != 0 {
            -p
        } else {
            p
        }
    }

    fn check_index(&self, l: usize, m: i64) -> Result<()> {
        if l > self.l_max() || m.unsigned_abs() as usize > l {
            return Err(Error::OutOfRange(format!(
                "(ℓ, m) = ({l}, {m}) with l_max = {}",
                self.l_max()
            )));
        }
        Ok(())
    }
}

/// Coefficient position of `(ℓ, m)`: `ℓ² + ℓ + m`.
pub fn coeff_position(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// A complex function sampled on a [`SphereGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SphereField {
    grid: SphereGrid,
    values: Vec<C64>,
}

impl SphereField {
    pub fn zeros(grid: &SphereGrid) -> Self {
        SphereField {
            grid: grid.clone(),
            values: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: &SphereGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(SphereField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn(grid: &SphereGrid, f: impl Fn(f64, f64) -> C64) -> Self {
        let values = (0..grid.len())
            .map(|o| {
                let (t, p) = grid.point(o);
                f(t, p)
            })
            .collect();
        SphereField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn scaled(mut self, factor: C64) -> Self {
        self.scale(factor);
        self
    }
}

impl GridFunction for SphereField {
    fn values(&self) -> &[C64] {
        &self.values
    }

    fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    fn volume(&self) -> f64 {
        4.0 * PI
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.grid == other.grid
    }

    fn inner_product(&self, other: &Self) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let n_phi = self.grid.n_phi();
        let mut total = C64::new(0.0, 0.0);
        for (j, w) in self.grid.row_weights().iter().enumerate() {
            let row = j * n_phi..(j + 1) * n_phi;
            let s: C64 = self.values[row.clone()]
                .iter()
                .zip(&other.values[row])
                .map(|(u, v)| u * v.conj())
                .sum();
            total += s * (w / n_phi as f64);
        }
        Ok(total)
    }
}

/// Spherical-harmonic coefficients for `0 ≤ ℓ ≤ l_max`, `|m| ≤ ℓ`, stored at
/// position `ℓ² + ℓ + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphCoeffMap {
    l_max: usize,
    entries: Vec<C64>,
}

impl SphCoeffMap {
    pub fn zeros(l_max: usize) -> Self {
        SphCoeffMap {
            l_max,
            entries: vec![C64::new(0.0, 0.0); (l_max + 1) * (l_max + 1)],
        }
    }

    pub fn from_entries(l_max: usize, entries: Vec<C64>) -> Result<Self> {
        let expected = (l_max + 1) * (l_max + 1);
        if entries.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: entries.len(),
            });
        }
        Ok(SphCoeffMap { l_max, entries })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn get(&self, l: usize, m: i64) -> Result<C64> {
        self.check(l, m)?;
        Ok(self.entries[coeff_position(l, m)])
    }

    pub fn set(&mut self, l: usize, m: i64, value: C64) -> Result<()> {
        self.check(l, m)?;
        self.entries[coeff_position(l, m)] = value;
        Ok(())
    }

    fn check(&self, l: usize, m: i64) -> Result<()> {
        if l > self.l_max || m.unsigned_abs() as usize > l {
            return Err(Error::OutOfRange(format!("(ℓ, m) = ({l}, {m})")));
        }
        Ok(())
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Orthonormal `Y_ℓ^m` sampled on the grid.
pub fn sph_harmonic(l: usize, m: i64, grid: &SphereGrid) -> Result<SphereField> {
    grid.check_index(l, m)?;
    let n_phi = grid.n_phi();
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..grid.n_theta() {
        let t = grid.theta_factor(l, m, j);
        for p in 0..n_phi {
            // Integer phase reduction keeps e^{imφ} exact at large m·p.
            let phase = 2.0 * PI * ((m * p as i64).rem_euclid(n_phi as i64)) as f64 / n_phi as f64;
            values.push(C64::from_polar(t, phase));
        }
    }
    SphereField::from_values(grid, values)
}

/// Row FFTs of a θ-row-major buffer.
fn row_fft(grid: &SphereGrid, data: &mut [C64], inverse: bool) {
    let plan = if inverse {
        &grid.inner.inverse
    } else {
        &grid.inner.forward
    };
    let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(data, &mut scratch);
}

fn fft_slot(m: i64, n_phi: usize) -> usize {
    m.rem_euclid(n_phi as i64) as usize
}

/// Quadrature projection onto `Y_ℓ^m`, `ℓ ≤ l_max`.
pub fn sht_forward(f: &SphereField) -> SphCoeffMap {
    let grid = f.grid();
    let (n_phi, n_theta, l_max) = (grid.n_phi(), grid.n_theta(), grid.l_max());
    let mut rows = f.values.clone();
    row_fft(grid, &mut rows, false);
    let mut out = SphCoeffMap::zeros(l_max);
    for j in 0..n_theta {
        let w = grid.row_weights()[j] / n_phi as f64;
        let row = &rows[j * n_phi..(j + 1) * n_phi];
        for l in 0..=l_max {
            for m in -(l as i64)..=(l as i64) {
                out.entries[coeff_position(l, m)] += row[fft_slot(m, n_phi)] * (w * grid.theta_factor(l, m, j));
            }
        }
    }
    out
}

/// Synthesis `Σ c_ℓm Y_ℓ^m` on the grid.
pub fn sht_inverse(c: &SphCoeffMap, grid: &SphereGrid) -> Result<SphereField> {
    if c.l_max() != grid.l_max() {
        return Err(Error::DimensionMismatch {
            expected: grid.l_max(),
            got: c.l_max(),
        });
    }
    let (n_phi, n_theta, l_max) = (grid.n_phi(), grid.n_theta(), grid.l_max());
    let mut rows = vec![C64::new(0.0, 0.0); grid.len()];
    for j in 0..n_theta {
        let row = &mut rows[j * n_phi..(j + 1) * n_phi];
        for l in 0..=l_max {
            for m in -(l as i64)..=(l as i64) {
                row[fft_slot(m, n_phi)] += c.entries[coeff_position(l, m)] * grid.theta_factor(l, m, j);
            }
        }
    }
    row_fft(grid, &mut rows, true);
    SphereField::from_values(grid, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoulombParams {
    pub k: f64,
    pub e: f64,
    pub r: f64,
}

impl Default for CoulombParams {
    fn default() -> Self {
        CoulombParams {
            k: 1.0,
            e: 1.0,
            r: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DipoleParams {
    pub v0: f64,
}

impl Default for DipoleParams {
    fn default() -> Self {
        DipoleParams { v0: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpherePotential {
    Free,
    /// `V = -k e² / r²`, constant on the sphere of radius `r`.
    Coulomb(CoulombParams),
    /// `V = V₀ cos θ`.
    Dipole(DipoleParams),
}

pub const SPHERE_POTENTIALS: [&str; 2] = ["coulomb", "dipole"];

impl SpherePotential {
    pub fn from_config(name: &str, params: Option<&Value>) -> Result<Self> {
        fn parse<T: Default + for<'de> Deserialize<'de>>(params: Option<&Value>) -> Result<T> {
            match params {
                None | Some(Value::Null) => Ok(T::default()),
                Some(v) => serde_json::from_value(v.clone())
                    .map_err(|e| Error::config(format!("potential params: {e}"))),
            }
        }
        Ok(match name {
            "free" | "free_particle" => SpherePotential::Free,
            "coulomb" => SpherePotential::Coulomb(parse(params)?),
            "dipole" | "coulomb_dipole" => SpherePotential::Dipole(parse(params)?),
            other => return Err(Error::config(format!("unknown sphere potential `{other}`"))),
        })
    }

    pub fn is_sphere_name(name: &str) -> bool {
        matches!(name, "coulomb" | "dipole" | "coulomb_dipole")
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpherePotential::Free => "free_particle",
            SpherePotential::Coulomb(_) => "coulomb",
            SpherePotential::Dipole(_) => "dipole",
        }
    }

    pub fn value_at(&self, theta: f64) -> f64 {
        match self {
            SpherePotential::Free => 0.0,
            SpherePotential::Coulomb(p) => -p.k * p.e * p.e / (p.r * p.r),
            SpherePotential::Dipole(p) => p.v0 * theta.cos(),
        }
    }

    pub fn evaluate(&self, grid: &SphereGrid) -> Vec<f64> {
        (0..grid.len()).map(|o| self.value_at(grid.point(o).0)).collect()
    }
}

/// Precomputed Strang splitting on the sphere.
///
/// The potential half-step is `exp(-i dt/(2ħ) P V P)`, with `P V P` the
/// Galerkin matrix of `V` on `ℓ ≤ l_max` assembled by grid quadrature. This
/// is exactly unitary on the band, whereas a pointwise phase followed by
/// truncation leaks norm into `ℓ = l_max + 1` every step. One full step is
/// stored as a dense `(l_max+1)²` square matrix.
#[derive(Clone, Debug)]
pub struct SpherePropagator {
    grid: SphereGrid,
    config: SolverConfig,
    potential_name: &'static str,
    step: Option<DMatrix<C64>>,
    kinetic: Vec<C64>,
}

/// `⟨Y_i, V Y_j⟩` for all band indices, by quadrature, symmetrized.
pub fn potential_matrix(grid: &SphereGrid, potential: &SpherePotential) -> Result<DMatrix<C64>> {
    let n = grid.coeff_len();
    let v = potential.evaluate(grid);
    let mut m = DMatrix::<C64>::zeros(n, n);
    for (j, (l, mm)) in grid.indices().into_iter().enumerate() {
        let mut f = sph_harmonic(l, mm, grid)?;
        f.values.iter_mut().zip(&v).for_each(|(z, vi)| *z *= vi);
        let col = sht_forward(&f);
        m.column_mut(j).iter_mut().zip(col.entries()).for_each(|(a, b)| *a = *b);
    }
    Ok((&m + m.adjoint()) * C64::new(0.5, 0.0))
}

/// `exp(-i s H)` for Hermitian `H`, via its eigendecomposition.
fn hermitian_exp(h: DMatrix<C64>, s: f64) -> DMatrix<C64> {
    let eig = h.symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -s * l)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

impl SpherePropagator {
    pub fn new(grid: &SphereGrid, potential: &SpherePotential, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let dt = config.dt;
        let kinetic: Vec<C64> = grid
            .indices()
            .into_iter()
            .map(|(l, _)| {
                let ev = (l * (l + 1)) as f64;
                C64::from_polar(1.0, -config.hbar * ev * dt / (2.0 * config.mass))
            })
            .collect();
        let step = match potential {
            SpherePotential::Free => None,
            _ => {
                let half = hermitian_exp(potential_matrix(grid, potential)?, dt / (2.0 * config.hbar));
                let k = DMatrix::from_diagonal(&DVector::from_vec(kinetic.clone()));
                Some(&half * k * &half)
            }
        };
        Ok(SpherePropagator {
            grid: grid.clone(),
            config,
            potential_name: potential.name(),
            step,
            kinetic,
        })
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Evolves band-limited coefficients by `T/dt` Strang steps.
    pub fn evolve_coeffs(&self, c0: &SphCoeffMap) -> Result<SphCoeffMap> {
        if c0.l_max() != self.grid.l_max() {
            return Err(Error::DimensionMismatch { expected: self.grid.coeff_len(), got: c0.entries.len() });
        }
        let mut c = c0.clone();
        match &self.step {
            None => {
                let steps = self.config.steps() as i32;
                c.entries.iter_mut().zip(&self.kinetic).for_each(|(v, k)| *v *= k.powi(steps));
            }
            Some(step) => {
                let mut v = DVector::from_column_slice(&c.entries);
                for _ in 0..self.config.steps() {
                    v = step * v;
                }
                c.entries.copy_from_slice(v.as_slice());
            }
        }
        Ok(c)
    }

    pub fn evolve(&self, psi0: &SphereField) -> Result<SphereField> {
        if psi0.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        sht_inverse(&self.evolve_coeffs(&sht_forward(psi0))?, &self.grid)
    }
}

/// One-shot evolution on the sphere.
pub fn evolve_sphere(psi0: &SphereField, potential: &SpherePotential, config: SolverConfig) -> Result<SphereField> {
    SpherePropagator::new(psi0.grid(), potential, config)?.evolve(psi0)
}

/// Kinetic-only evolution in closed form: `c_ℓm ↦ e^{-iħℓ(ℓ+1)T/2m} c_ℓm`.
pub fn free_exact_sphere(c: &SphCoeffMap, t: f64, hbar: f64, mass: f64) -> SphCoeffMap {
    let mut out = c.clone();
    for l in 0..=c.l_max() {
        let eta = C64::from_polar(1.0, -hbar * (l * (l + 1)) as f64 * t / (2.0 * mass));
        for m in -(l as i64)..=(l as i64) {
            out.entries[coeff_position(l, m)] *= eta;
        }
    }
    out
}

/// The sphere split-step solver as a query oracle.
#[derive(Clone, Debug)]
pub struct SphereSolver {
    propagator: Arc<SpherePropagator>,
}

impl SphereSolver {
    pub fn new(grid: &SphereGrid, potential: &SpherePotential, config: SolverConfig) -> Result<Self> {
        Ok(SphereSolver {
            propagator: Arc::new(SpherePropagator::new(grid, potential, config)?),
        })
    }

    pub fn propagator(&self) -> &SpherePropagator {
        &self.propagator
    }
}

impl QueryOracle<SphereField> for SphereSolver {
    fn query(&self, input: &SphereField) -> Result<SphereField> {
        self.propagator.evolve(input)
    }

    fn describe(&self) -> String {
        let c = self.propagator.config();
        format!(
            "sphere_split_step potential={} T={} dt={} hbar={} mass={}",
            self.propagator.potential_name, c.t_final, c.dt, c.hbar, c.mass
        )
    }
}
