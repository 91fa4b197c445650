//! Uniform grids on the torus `[0, L)^d`, sampled fields and their Fourier
//! coefficients.
//!
//! Fourier modes are normalised to unit L² norm on the torus,
//! `φ_k(x) = L^{-d/2} exp(2πi k·x / L)`, so that `L = 1` gives the usual
//! `exp(2πi k·x)` and `L = 2π` gives `exp(i k·x)` up to normalisation.
//! Coefficients are always stored on the full Nyquist-limited index set; a
//! band limit is applied by consumers with [`CoeffMap::truncated`].

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::field::GridFunction;
use crate::{Error, Result, C64};

/// Integer frequency vector. The second component is zero when `d = 1`.
pub type Freq = [i64; 2];

/// Grid geometry as it appears in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
    #[serde(alias = "L")]
    pub length: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            d: 2,
            n: 128,
            length: 2.0 * PI,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.d, self.n, self.length)
    }
}

struct FftPlans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans_for(n: usize) -> Arc<FftPlans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<FftPlans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut cache = cache.lock().expect("fft plan cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(FftPlans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// A uniform grid on `[0, L)^d` with `n` points per axis.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
    plans: Arc<FftPlans>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("d", &self.dim)
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

impl Grid {
    /// Builds a grid with points `x_j = j L / n` along each axis.
    pub fn new(d: usize, n_per_dim: usize, length: f64) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(Error::InvalidGrid(format!("dimension {d} not in {{1, 2}}")));
        }
        if n_per_dim < 2 || n_per_dim % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 2, got {n_per_dim}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("domain length must be positive, got {length}")));
        }
        Ok(Grid {
            dim: d,
            n: n_per_dim,
            length,
            plans: plans_for(n_per_dim),
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            d: self.dim,
            n: self.n,
            length: self.length,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_dim(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight of one point, `(L/n)^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Coordinates along one axis.
    pub fn axis_points(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.spacing()).collect()
    }

    /// Physical coordinates of the point at a flat row-major offset.
    pub fn point(&self, offset: usize) -> [f64; 2] {
        let h = self.spacing();
        match self.dim {
            1 => [offset as f64 * h, 0.0],
            _ => [(offset / self.n) as f64 * h, (offset % self.n) as f64 * h],
        }
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |o| self.point(o))
    }

    pub fn nyquist(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Whether `k` lies within the Nyquist range `|k_i| ≤ n/2`.
    pub fn admits(&self, k: Freq) -> bool {
        let nyq = self.nyquist();
        k[0].abs() <= nyq && (if self.dim == 1 { k[1] == 0 } else { k[1].abs() <= nyq })
    }

    fn check_freq(&self, k: Freq) -> Result<()> {
        if self.admits(k) {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!(
                "frequency {k:?} beyond Nyquist {} (d = {})",
                self.nyquist(),
                self.dim
            )))
        }
    }

    /// Storage offset of frequency `k` in a coefficient vector (FFT order).
    pub fn freq_offset(&self, k: Freq) -> Result<usize> {
        self.check_freq(k)?;
        let n = self.n as i64;
        let a = k[0].rem_euclid(n) as usize;
        Ok(match self.dim {
            1 => a,
            _ => a * self.n + k[1].rem_euclid(n) as usize,
        })
    }

    /// Canonical frequency (each component in `[-n/2, n/2)`) stored at `offset`.
    pub fn freq_at(&self, offset: usize) -> Freq {
        let wrap = |i: usize| {
            if i < self.n / 2 {
                i as i64
            } else {
                i as i64 - self.n as i64
            }
        };
        match self.dim {
            1 => [wrap(offset), 0],
            _ => [wrap(offset / self.n), wrap(offset % self.n)],
        }
    }

    pub fn freqs(&self) -> impl Iterator<Item = Freq> + '_ {
        (0..self.len()).map(move |o| self.freq_at(o))
    }

    /// All frequencies with `|k|_∞ ≤ k_max`, in lexicographic order.
    pub fn box_freqs(&self, k_max: i64) -> Vec<Freq> {
        let range = -k_max..=k_max;
        match self.dim {
            1 => range.map(|a| [a, 0]).collect(),
            _ => range
                .clone()
                .flat_map(|a| (-k_max..=k_max).map(move |b| [a, b]))
                .collect(),
        }
    }

    /// Squared physical wavenumber `(2π|k|/L)²` at every coefficient offset.
    pub fn wavenumbers_sq(&self) -> Vec<f64> {
        let scale = 2.0 * PI / self.length;
        self.freqs().map(|k| scale * scale * freq_norm_sq(k)).collect()
    }

    pub(crate) fn fft_in_place(&self, data: &mut [C64], inverse: bool) {
        self.fft_rows(data, inverse);
        if self.dim == 2 {
            transpose_square(data, self.n);
            self.fft_rows(data, inverse);
            transpose_square(data, self.n);
        }
    }

    /// Forward transform leaving a 2-D spectrum transposed (entry `(i, j)`
    /// holds frequency `(k_j, k_i)`). Pairs with
    /// [`Grid::inverse_fft_from_transposed`]; any pointwise multiplier in
    /// between must be symmetric under `k_1 ↔ k_2`.
    pub(crate) fn forward_fft_transposed(&self, data: &mut [C64]) {
        self.fft_rows(data, false);
        if self.dim == 2 {
            transpose_square(data, self.n);
            self.fft_rows(data, false);
        }
    }

    pub(crate) fn inverse_fft_from_transposed(&self, data: &mut [C64]) {
        self.fft_rows(data, true);
        if self.dim == 2 {
            transpose_square(data, self.n);
            self.fft_rows(data, true);
        }
    }

    fn fft_rows(&self, data: &mut [C64], inverse: bool) {
        let plan = if inverse {
            &self.plans.inverse
        } else {
            &self.plans.forward
        };
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
    }

    /// Grid values to coefficients `⟨f, φ_k⟩`, in place.
    pub(crate) fn analyze_in_place(&self, data: &mut [C64]) {
        self.fft_in_place(data, false);
        let scale = self.cell_volume() / self.volume().sqrt();
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// Coefficients to grid values `Σ c_k φ_k(x_j)`, in place.
    pub(crate) fn synthesize_in_place(&self, data: &mut [C64]) {
        self.fft_in_place(data, true);
        let scale = 1.0 / self.volume().sqrt();
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

pub fn freq_norm_sq(k: Freq) -> f64 {
    (k[0] * k[0] + k[1] * k[1]) as f64
}

pub fn freq_inf_norm(k: Freq) -> i64 {
    k[0].abs().max(k[1].abs())
}

fn transpose_square(data: &mut [C64], n: usize) {
    const B: usize = 16;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// A complex function sampled on a torus grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<C64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> C64) -> Self {
        Field {
            grid: grid.clone(),
            values: grid.points().map(f).collect(),
        }
    }

    /// The unit-norm Fourier mode `φ_k` sampled on the grid.
    pub fn fourier_mode(grid: &Grid, k: Freq) -> Result<Self> {
        grid.check_freq(k)?;
        let amp = grid.volume().sqrt().recip();
        let n = grid.n_per_dim() as f64;
        let n_axis = grid.n_per_dim();
        let dim = grid.dim();
        // Exact phases from integer arithmetic: 2π (k·j mod n) / n.
        let values = (0..grid.len())
            .map(|o| {
                let (j0, j1) = if dim == 1 { (o, 0) } else { (o / n_axis, o % n_axis) };
                let m = (k[0] * j0 as i64 + k[1] * j1 as i64).rem_euclid(n_axis as i64);
                C64::from_polar(amp, 2.0 * PI * m as f64 / n)
            })
            .collect();
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Fourier coefficients `⟨f, φ_k⟩` on the full Nyquist range, via FFT.
    pub fn forward_coeffs(&self) -> CoeffMap {
        let mut entries = self.values.clone();
        self.grid.analyze_in_place(&mut entries);
        CoeffMap {
            grid: self.grid.clone(),
            entries,
        }
    }

    /// `‖f‖_{H^s} = sqrt(Σ_k (1 + |k|²)^s |⟨f, φ_k⟩|²)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.forward_coeffs().sobolev_norm(s)
    }

    pub fn add_assign(&mut self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        self.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn scaled(mut self, factor: C64) -> Self {
        self.scale(factor);
        self
    }
}

impl GridFunction for Field {
    fn values(&self) -> &[C64] {
        &self.values
    }

    fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    fn volume(&self) -> f64 {
        self.grid.volume()
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.grid == other.grid
    }

    fn inner_product(&self, other: &Self) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let sum: C64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u * v.conj())
            .sum();
        Ok(sum * self.grid.cell_volume())
    }
}

/// Fourier coefficients on the full Nyquist-limited index set.
///
/// Entries are stored in FFT order; use [`Grid::freq_offset`] /
/// [`Grid::freq_at`] or the accessors here to address them by frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffMap {
    grid: Grid,
    entries: Vec<C64>,
}

impl CoeffMap {
    pub fn zeros(grid: &Grid) -> Self {
        CoeffMap {
            grid: grid.clone(),
            entries: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Builds a map from `(k, coefficient)` pairs; unspecified entries are zero.
    pub fn from_pairs(grid: &Grid, pairs: impl IntoIterator<Item = (Freq, C64)>) -> Result<Self> {
        let mut map = CoeffMap::zeros(grid);
        for (k, c) in pairs {
            map.set(k, c)?;
        }
        Ok(map)
    }

    pub fn from_entries(grid: &Grid, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: entries.len(),
            });
        }
        Ok(CoeffMap {
            grid: grid.clone(),
            entries,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn get(&self, k: Freq) -> Result<C64> {
        Ok(self.entries[self.grid.freq_offset(k)?])
    }

    pub fn set(&mut self, k: Freq, value: C64) -> Result<()> {
        let o = self.grid.freq_offset(k)?;
        self.entries[o] = value;
        Ok(())
    }

    /// Raw entries in FFT order.
    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (Freq, C64)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .map(move |(o, &c)| (self.grid.freq_at(o), c))
    }

    /// Synthesises the field `Σ_k c_k φ_k`.
    pub fn inverse_coeffs(&self) -> Field {
        let mut values = self.entries.clone();
        self.grid.synthesize_in_place(&mut values);
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Coefficient-space inner product `Σ a_k conj(b_k)`.
    pub fn dot(&self, other: &CoeffMap) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b.conj())
            .sum())
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.iter()
            .map(|(k, c)| (1.0 + freq_norm_sq(k)).powf(s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Copy with every entry outside `|k|_∞ ≤ k_max` set to zero.
    pub fn truncated(&self, k_max: i64) -> CoeffMap {
        let mut out = self.clone();
        for (o, c) in out.entries.iter_mut().enumerate() {
            if freq_inf_norm(self.grid.freq_at(o)) > k_max {
                *c = C64::new(0.0, 0.0);
            }
        }
        out
    }
}
