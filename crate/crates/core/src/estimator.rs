//! The actively probed linear estimator `F̂ = Σ_k w_k ⊗ φ_k`.
//!
//! Fitting queries a solver on every basis function `φ_k` of the band and
//! stores the response `w_k` as a full-resolution coefficient vector (a
//! column). Applying the estimator analyses the input against the clean
//! `φ_k`, accumulates `Σ w_k ⟨ψ, φ_k⟩` in coefficient space and synthesises.
//! Modes of the input outside the band contribute nothing.

use std::fmt::Debug;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::GridFunction;
use crate::grid::{Field, Freq, Grid, GridSpec};
use crate::harness::noise::{add_noise, apply_mask, check_probability, draw_mask};
use crate::rng::{self, tag};
use crate::sphere::{coeff_position, sht_forward, sht_inverse, sph_harmonic, SphCoeffMap, SphereField, SphereGrid, SphereGridSpec};
use crate::{Error, Result, C64};

/// A solver that can be queried on basis functions.
pub trait QueryOracle<F>: Send + Sync {
    fn query(&self, input: &F) -> Result<F>;

    /// Human-readable summary recorded in estimator metadata.
    fn describe(&self) -> String {
        "oracle".to_string()
    }
}

impl<F, O: QueryOracle<F> + ?Sized> QueryOracle<F> for Box<O> {
    fn query(&self, input: &F) -> Result<F> {
        (**self).query(input)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<F, O: QueryOracle<F> + ?Sized> QueryOracle<F> for std::sync::Arc<O> {
    fn query(&self, input: &F) -> Result<F> {
        (**self).query(input)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// An orthonormal basis with a finite queried band and a full-resolution
/// coefficient space.
pub trait SpectralBasis: Clone + Debug + Send + Sync {
    type Field: GridFunction;
    type Index: Copy + Debug + PartialEq + Send + Sync;

    /// The band, in a fixed deterministic order.
    fn queried_indices(&self) -> Vec<Self::Index>;

    fn basis_function(&self, index: Self::Index) -> Result<Self::Field>;

    /// Length of a full-resolution coefficient vector.
    fn coeff_len(&self) -> usize;

    fn coeff_position(&self, index: Self::Index) -> Result<usize>;

    fn analyze(&self, f: &Self::Field) -> Result<Vec<C64>>;

    fn synthesize(&self, coeffs: Vec<C64>) -> Result<Self::Field>;

    /// Stream coordinate for per-index random draws.
    fn index_key(&self, index: Self::Index) -> u64;

    /// Integer pair used in files and labels.
    fn index_pair(&self, index: Self::Index) -> [i64; 2];

    fn spec(&self) -> BasisSpec;
}

/// Serializable description of a basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisSpec {
    Torus { grid: GridSpec, k_max: i64 },
    Sphere { grid: SphereGridSpec },
}

/// Fourier modes with `|k|∞ ≤ k_max` on a torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusBasis {
    grid: Grid,
    k_max: i64,
}

impl TorusBasis {
    /// The band must fit strictly inside the Nyquist range so that no two
    /// queried modes alias.
    pub fn new(grid: &Grid, k_max: i64) -> Result<Self> {
        if k_max < 0 || 2 * k_max + 1 > grid.n_per_dim() as i64 {
            return Err(Error::InvalidConfig(format!(
                "K = {k_max} does not fit a grid with {} points per axis",
                grid.n_per_dim()
            )));
        }
        Ok(TorusBasis {
            grid: grid.clone(),
            k_max,
        })
    }

    /// The band for sample budget `n`.
    pub fn for_budget(grid: &Grid, n: usize) -> Result<Self> {
        TorusBasis::new(grid, k_index(n, grid.dim())?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k_max(&self) -> i64 {
        self.k_max
    }
}

impl SpectralBasis for TorusBasis {
    type Field = Field;
    type Index = Freq;

    fn queried_indices(&self) -> Vec<Freq> {
        self.grid.box_freqs(self.k_max)
    }

    fn basis_function(&self, k: Freq) -> Result<Field> {
        Field::fourier_mode(&self.grid, k)
    }

    fn coeff_len(&self) -> usize {
        self.grid.len()
    }

    fn coeff_position(&self, k: Freq) -> Result<usize> {
        self.grid.freq_offset(k)
    }

    fn analyze(&self, f: &Field) -> Result<Vec<C64>> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(f.forward_coeffs().into_entries())
    }

    fn synthesize(&self, coeffs: Vec<C64>) -> Result<Field> {
        let mut values = coeffs;
        if values.len() != self.grid.len() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.len(),
                got: values.len(),
            });
        }
        self.grid.synthesize_in_place(&mut values);
        Field::from_values(&self.grid, values)
    }

    fn index_key(&self, k: Freq) -> u64 {
        rng::index_key(k)
    }

    fn index_pair(&self, k: Freq) -> [i64; 2] {
        k
    }

    fn spec(&self) -> BasisSpec {
        BasisSpec::Torus {
            grid: self.grid.spec(),
            k_max: self.k_max,
        }
    }
}

/// Spherical harmonics with `ℓ ≤ l_max` (the grid's cutoff).
#[derive(Clone, Debug, PartialEq)]
pub struct SphereBasis {
    grid: SphereGrid,
}

impl SphereBasis {
    pub fn new(grid: &SphereGrid) -> Self {
        SphereBasis { grid: grid.clone() }
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }
}

impl SpectralBasis for SphereBasis {
    type Field = SphereField;
    type Index = (usize, i64);

    fn queried_indices(&self) -> Vec<(usize, i64)> {
        self.grid.indices()
    }

    fn basis_function(&self, (l, m): (usize, i64)) -> Result<SphereField> {
        sph_harmonic(l, m, &self.grid)
    }

    fn coeff_len(&self) -> usize {
        self.grid.coeff_len()
    }

    fn coeff_position(&self, (l, m): (usize, i64)) -> Result<usize> {
        if l > self.grid.l_max() || m.unsigned_abs() as usize > l {
            return Err(Error::OutOfRange(format!("(ℓ, m) = ({l}, {m})")));
        }
        Ok(coeff_position(l, m))
    }

    fn analyze(&self, f: &SphereField) -> Result<Vec<C64>> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(sht_forward(f).into_entries())
    }

    fn synthesize(&self, coeffs: Vec<C64>) -> Result<SphereField> {
        sht_inverse(&SphCoeffMap::from_entries(self.grid.l_max(), coeffs)?, &self.grid)
    }

    fn index_key(&self, (l, m): (usize, i64)) -> u64 {
        rng::index_key([l as i64, m])
    }

    fn index_pair(&self, (l, m): (usize, i64)) -> [i64; 2] {
        [l as i64, m]
    }

    fn spec(&self) -> BasisSpec {
        BasisSpec::Sphere {
            grid: self.grid.spec(),
        }
    }
}

/// `K_n = (n^{1/d} − 1)/2`, defined for `n ≥ 3^d`.
pub fn k_n(n: usize, d: usize) -> Result<f64> {
    check_budget(n, d)?;
    Ok(((n as f64).powf(1.0 / d as f64) - 1.0) / 2.0)
}

/// `⌊K_n⌋`, computed in integers so that `(2⌊K_n⌋ + 1)^d ≤ n` always holds.
pub fn k_index(n: usize, d: usize) -> Result<i64> {
    check_budget(n, d)?;
    let mut root = (n as f64).powf(1.0 / d as f64).round() as usize;
    while root.pow(d as u32) > n {
        root -= 1;
    }
    while (root + 1).pow(d as u32) <= n {
        root += 1;
    }
    Ok(((root - 1) / 2) as i64)
}

fn check_budget(n: usize, d: usize) -> Result<()> {
    if !(1..=2).contains(&d) {
        return Err(Error::config(format!("dimension must be 1 or 2, got {d}")));
    }
    if n < 3usize.pow(d as u32) {
        return Err(Error::config(format!("budget n = {n} is below 3^d = {}", 3usize.pow(d as u32))));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskGranularity {
    /// One keep-mask over coefficient positions, shared by every column.
    #[default]
    PerDataset,
    /// An independent keep-mask per column.
    PerSample,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Relative noise on queried inputs and outputs.
    pub noise_rel: f64,
    pub mask_p: f64,
    pub mask_granularity: MaskGranularity,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            noise_rel: 0.0,
            mask_p: 0.0,
            mask_granularity: MaskGranularity::PerDataset,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn noiseless(seed: u64) -> Self {
        FitConfig {
            seed,
            ..FitConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub solver: String,
    pub fit: FitConfig,
}

/// The fitted operator: one response column per queried index.
#[derive(Clone, Debug)]
pub struct Estimator<B: SpectralBasis> {
    basis: B,
    indices: Vec<B::Index>,
    positions: Vec<usize>,
    columns: Vec<Vec<C64>>,
    meta: FitMetadata,
}

struct QueryContext<'a, B: SpectralBasis> {
    basis: &'a B,
    config: FitConfig,
    shared_mask: Option<Vec<bool>>,
}

impl<B: SpectralBasis> QueryContext<'_, B> {
    fn new(basis: &B, config: FitConfig) -> Result<QueryContext<'_, B>> {
        check_probability(config.mask_p)?;
        if !(config.noise_rel >= 0.0 && config.noise_rel.is_finite()) {
            return Err(Error::config("noise level must be finite and nonnegative"));
        }
        let shared_mask = (config.mask_p > 0.0 && config.mask_granularity == MaskGranularity::PerDataset).then(|| {
            draw_mask(
                basis.coeff_len(),
                config.mask_p,
                &mut rng::stream(config.seed, &[tag::FIT_MASK]),
            )
        });
        Ok(QueryContext {
            basis,
            config,
            shared_mask,
        })
    }

    fn column(&self, oracle: &impl QueryOracle<B::Field>, index: B::Index) -> Result<Vec<C64>> {
        let key = self.basis.index_key(index);
        let seed = self.config.seed;
        let phi = self.basis.basis_function(index)?;
        let input = add_noise(&phi, self.config.noise_rel, &mut rng::stream(seed, &[tag::FIT_INPUT, key]));
        let response = oracle.query(&input).map_err(|e| Error::Query {
            index: format!("{:?}", self.basis.index_pair(index)),
            source: Box::new(e),
        })?;
        let response = add_noise(&response, self.config.noise_rel, &mut rng::stream(seed, &[tag::FIT_OUTPUT, key]));
        let mut col = self.basis.analyze(&response)?;
        if let Some(mask) = &self.shared_mask {
            apply_mask(&mut col, mask);
        } else if self.config.mask_p > 0.0 {
            let mask = draw_mask(col.len(), self.config.mask_p, &mut rng::stream(seed, &[tag::FIT_MASK, key]));
            apply_mask(&mut col, &mask);
        }
        if col.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Numerical(format!(
                "non-finite response for basis index {:?}",
                self.basis.index_pair(index)
            )));
        }
        Ok(col)
    }
}

/// Queries `oracle` once per basis index of the band and stores the responses.
///
/// Each index draws its noise and mask from streams keyed by `(seed, index)`,
/// so the result does not depend on scheduling.
pub fn fit<B: SpectralBasis>(oracle: &impl QueryOracle<B::Field>, basis: &B, config: FitConfig) -> Result<Estimator<B>> {
    let ctx = QueryContext::new(basis, config)?;
    let indices = basis.queried_indices();
    let columns = indices
        .par_iter()
        .map(|&i| ctx.column(oracle, i))
        .collect::<Result<Vec<_>>>()?;
    Estimator::from_columns(
        basis.clone(),
        columns,
        FitMetadata {
            solver: oracle.describe(),
            fit: config,
        },
    )
}

/// Maximum Gram deviation on the band and maximum expansion ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitarityReport {
    pub max_gram_error: f64,
    pub max_expansion: f64,
}

fn random_unit(len: usize, rng: &mut rng::StreamRng) -> Vec<C64> {
    let v: Vec<C64> = (0..len)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / norm).collect()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

impl<B: SpectralBasis> Estimator<B> {
    /// Assembles an estimator from precomputed columns in the basis' index
    /// order.
    pub fn from_columns(basis: B, columns: Vec<Vec<C64>>, meta: FitMetadata) -> Result<Self> {
        let indices = basis.queried_indices();
        if columns.len() != indices.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: columns.len(),
            });
        }
        if let Some(bad) = columns.iter().find(|c| c.len() != basis.coeff_len()) {
            return Err(Error::DimensionMismatch {
                expected: basis.coeff_len(),
                got: bad.len(),
            });
        }
        let positions = indices
            .iter()
            .map(|&i| basis.coeff_position(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Estimator {
            basis,
            indices,
            positions,
            columns,
            meta,
        })
    }

    pub fn basis(&self) -> &B {
        &self.basis
    }

    pub fn indices(&self) -> &[B::Index] {
        &self.indices
    }

    pub fn columns(&self) -> &[Vec<C64>] {
        &self.columns
    }

    pub fn column(&self, index: B::Index) -> Option<&[C64]> {
        self.indices
            .iter()
            .position(|&i| i == index)
            .map(|p| self.columns[p].as_slice())
    }

    pub fn metadata(&self) -> &FitMetadata {
        &self.meta
    }

    pub fn num_queries(&self) -> usize {
        self.indices.len()
    }

    /// Coefficients `⟨ψ, φ_k⟩` of the input on the band, in index order.
    pub fn band_coeffs(&self, psi: &B::Field) -> Result<Vec<C64>> {
        let c = self.basis.analyze(psi)?;
        Ok(self.positions.iter().map(|&p| c[p]).collect())
    }

    /// `Σ_k a_k w_k` as a full-resolution coefficient vector.
    pub fn combine(&self, band: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.basis.coeff_len()];
        for (col, &a) in self.columns.iter().zip(band) {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            out.iter_mut().zip(col).for_each(|(o, w)| *o += w * a);
        }
        out
    }

    pub fn apply(&self, psi: &B::Field) -> Result<B::Field> {
        let band = self.band_coeffs(psi)?;
        self.basis.synthesize(self.combine(&band))
    }

    pub fn apply_batch(&self, inputs: &[B::Field]) -> Result<Vec<B::Field>> {
        inputs.par_iter().map(|psi| self.apply(psi)).collect()
    }

    /// The band-to-band block `M_{ij} = (w_j)_{pos(i)}`, row-major.
    fn band_matrix(&self) -> Vec<C64> {
        let n = self.indices.len();
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        for (j, col) in self.columns.iter().enumerate() {
            for (i, &p) in self.positions.iter().enumerate() {
                m[i * n + j] = col[p];
            }
        }
        m
    }

    /// `F̂^q ψ`, equal to `q` successive applications.
    pub fn apply_power(&self, psi: &B::Field, q: usize) -> Result<B::Field> {
        Ok(self.apply_powers(psi, &[q])?.pop().expect("one power requested"))
    }

    /// `F̂^q ψ` for every `q` in `qs` (ascending, each ≥ 1).
    ///
    /// Only the band coefficients of an output feed the next application, so
    /// the iteration runs on the band block and synthesises once per `q`.
    pub fn apply_powers(&self, psi: &B::Field, qs: &[usize]) -> Result<Vec<B::Field>> {
        if qs.first().is_some_and(|&q| q == 0) || qs.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::config("powers must be ascending and at least 1"));
        }
        let n = self.indices.len();
        let m = self.band_matrix();
        let mut band = self.band_coeffs(psi)?;
        let mut step = 1;
        let mut out = Vec::with_capacity(qs.len());
        for &q in qs {
            while step < q {
                band = (0..n).map(|i| (0..n).map(|j| m[i * n + j] * band[j]).sum()).collect();
                step += 1;
            }
            out.push(self.basis.synthesize(self.combine(&band))?);
        }
        Ok(out)
    }

    /// Gram deviation over `pairs` random pairs in the band, and expansion
    /// over `singles` random full-resolution inputs, both computed in
    /// coefficient space.
    pub fn weak_unitarity_report(&self, pairs: usize, singles: usize, seed: u64) -> UnitarityReport {
        let n = self.indices.len();
        let max_gram_error = (0..pairs as u64)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::stream(seed, &[tag::PROBE, 0, t]);
                let (a, b) = (random_unit(n, &mut r), random_unit(n, &mut r));
                let (fa, fb) = (self.combine(&a), self.combine(&b));
                (dot(&fa, &fb) - dot(&a, &b)).norm()
            })
            .reduce(|| 0.0, f64::max);
        let max_expansion = (0..singles as u64)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::stream(seed, &[tag::PROBE, 1, t]);
                let u = random_unit(self.basis.coeff_len(), &mut r);
                let band: Vec<C64> = self.positions.iter().map(|&p| u[p]).collect();
                dot(&self.combine(&band), &self.combine(&band)).re.sqrt()
            })
            .reduce(|| 0.0, f64::max);
        UnitarityReport {
            max_gram_error,
            max_expansion,
        }
    }

    /// Writes the estimator: one JSON header line, then every column as
    /// little-endian `f64` pairs `(re, im)` in index order.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = FileHeader {
            format: FILE_FORMAT.to_string(),
            version: 1,
            basis: self.basis.spec(),
            coeff_len: self.basis.coeff_len(),
            indices: self.indices.iter().map(|&i| self.basis.index_pair(i)).collect(),
            meta: self.meta.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(16 * self.basis.coeff_len());
        for col in &self.columns {
            buf.clear();
            for c in col {
                buf.extend_from_slice(&c.re.to_le_bytes());
                buf.extend_from_slice(&c.im.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }
}

impl Estimator<TorusBasis> {
    /// Grows the band to `k_max_new`, querying only the new shells and
    /// reusing existing columns bitwise. Returns the estimator and the
    /// number of new queries.
    pub fn update(&self, oracle: &impl QueryOracle<Field>, k_max_new: i64) -> Result<(Self, usize)> {
        let old_k = self.basis.k_max();
        if k_max_new < old_k {
            return Err(Error::config(format!("cannot shrink the band from K = {old_k} to {k_max_new}")));
        }
        let basis = TorusBasis::new(self.basis.grid(), k_max_new)?;
        let ctx = QueryContext::new(&basis, self.meta.fit)?;
        let indices = basis.queried_indices();
        let fresh: Vec<Freq> = indices
            .iter()
            .copied()
            .filter(|k| crate::grid::freq_inf_norm(*k) > old_k)
            .collect();
        let new_columns = fresh
            .par_iter()
            .map(|&k| ctx.column(oracle, k).map(|c| (k, c)))
            .collect::<Result<Vec<_>>>()?;
        let mut new_iter = new_columns.into_iter();
        let mut old_iter = self.indices.iter().zip(&self.columns);
        let columns = indices
            .iter()
            .map(|k| {
                if crate::grid::freq_inf_norm(*k) > old_k {
                    new_iter.next().expect("fresh columns in index order").1
                } else {
                    let (ok, col) = old_iter.next().expect("old columns in index order");
                    debug_assert_eq!(ok, k);
                    col.clone()
                }
            })
            .collect();
        let est = Estimator::from_columns(basis, columns, self.meta.clone())?;
        Ok((est, fresh.len()))
    }
}

const FILE_FORMAT: &str = "oplearn-estimator";

#[derive(Serialize, Deserialize)]
struct FileHeader {
    format: String,
    version: u32,
    basis: BasisSpec,
    coeff_len: usize,
    indices: Vec<[i64; 2]>,
    meta: FitMetadata,
}

/// An estimator loaded from disk.
#[derive(Clone, Debug)]
pub enum AnyEstimator {
    Torus(Estimator<TorusBasis>),
    Sphere(Estimator<SphereBasis>),
}

impl AnyEstimator {
    pub fn read_from(mut r: impl BufRead) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: FileHeader = serde_json::from_str(line.trim_end())?;
        if header.format != FILE_FORMAT || header.version != 1 {
            return Err(Error::Format(format!("unsupported estimator format {} v{}", header.format, header.version)));
        }
        let read_columns = |r: &mut dyn Read, count: usize| -> Result<Vec<Vec<C64>>> {
            let mut buf = vec![0u8; 16 * header.coeff_len];
            (0..count)
                .map(|_| {
                    r.read_exact(&mut buf)
                        .map_err(|e| Error::Format(format!("truncated column data: {e}")))?;
                    Ok(buf
                        .chunks_exact(16)
                        .map(|b| {
                            let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
                            let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
                            C64::new(re, im)
                        })
                        .collect())
                })
                .collect()
        };
        let check = |pairs: Vec<[i64; 2]>| -> Result<()> {
            if pairs != header.indices {
                return Err(Error::Format("stored index order does not match the basis".into()));
            }
            Ok(())
        };
        match &header.basis {
            BasisSpec::Torus { grid, k_max } => {
                let basis = TorusBasis::new(&grid.build()?, *k_max)?;
                let idx = basis.queried_indices();
                check(idx.iter().map(|&i| basis.index_pair(i)).collect())?;
                let cols = read_columns(&mut r, idx.len())?;
                Ok(AnyEstimator::Torus(Estimator::from_columns(basis, cols, header.meta.clone())?))
            }
            BasisSpec::Sphere { grid } => {
                let basis = SphereBasis::new(&grid.build()?);
                let idx = basis.queried_indices();
                check(idx.iter().map(|&i| basis.index_pair(i)).collect())?;
                let cols = read_columns(&mut r, idx.len())?;
                Ok(AnyEstimator::Sphere(Estimator::from_columns(basis, cols, header.meta.clone())?))
            }
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        AnyEstimator::read_from(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        match self {
            AnyEstimator::Torus(e) => e.save(path),
            AnyEstimator::Sphere(e) => e.save(path),
        }
    }

    pub fn metadata(&self) -> &FitMetadata {
        match self {
            AnyEstimator::Torus(e) => e.metadata(),
            AnyEstimator::Sphere(e) => e.metadata(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CoeffMap;
    use crate::solver::{free_exact, FreeExactSolver, SolverConfig};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn torus(n: usize) -> Grid {
        Grid::new(2, n, 2.0 * PI).unwrap()
    }

    fn exact_fit(grid: &Grid, k: i64) -> Estimator<TorusBasis> {
        let oracle = FreeExactSolver::from_config(&SolverConfig::default());
        fit(&oracle, &TorusBasis::new(grid, k).unwrap(), FitConfig::noiseless(1)).unwrap()
    }

    fn random_field(grid: &Grid, seed: u64) -> Field {
        let mut r = rng::stream(seed, &[tag::PROBE]);
        Field::from_values(grid, random_unit(grid.len(), &mut r)).unwrap()
    }

    struct Failing;

    impl QueryOracle<Field> for Failing {
        fn query(&self, input: &Field) -> Result<Field> {
            if input.forward_coeffs().get([1, 1])?.norm() > 0.5 {
                Err(Error::Numerical("boom".into()))
            } else {
                Ok(input.clone())
            }
        }
    }

    struct Counting(std::sync::atomic::AtomicUsize);

    impl QueryOracle<Field> for Counting {
        fn query(&self, input: &Field) -> Result<Field> {
            self.0.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            Ok(free_exact(input, 0.1, 1.0, 1.0))
        }
    }

    #[test]
    fn budget_to_band() {
        assert_eq!(k_index(9, 2).unwrap(), 1);
        assert_eq!(k_index(1089, 2).unwrap(), 16);
        assert_eq!(k_index(3, 1).unwrap(), 1);
        assert_eq!(k_index(1088, 2).unwrap(), 15);
        assert_eq!(k_n(1089, 2).unwrap(), 16.0);
        assert!((k_n(10, 2).unwrap() - (10f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        assert!(k_n(8, 2).is_err());
        for n in 9..3000 {
            let k = k_index(n, 2).unwrap();
            assert!(((2 * k + 1) as usize).pow(2) <= n);
            assert!(((2 * k + 3) as usize).pow(2) > n);
        }
    }

    #[test]
    fn free_exact_fit_columns_are_phases() {
        let g = torus(16);
        let est = exact_fit(&g, 3);
        assert_eq!(est.num_queries(), 49);
        for (&k, col) in est.indices().iter().zip(est.columns()) {
            let eta = crate::solver::free_phase(k, 2.0 * PI, 0.1, 1.0, 1.0);
            let p = g.freq_offset(k).unwrap();
            assert!((col[p] - eta).norm() < 1e-12);
            let off: f64 = col.iter().enumerate().filter(|(i, _)| *i != p).map(|(_, c)| c.norm_sqr()).sum();
            assert!(off.sqrt() < 1e-10);
        }
    }

    #[test]
    fn full_budget_issues_1089_queries() {
        let g = torus(64);
        let counter = Counting(Default::default());
        let est = fit(&counter, &TorusBasis::for_budget(&g, 1089).unwrap(), FitConfig::noiseless(0)).unwrap();
        assert_eq!(est.num_queries(), 1089);
        assert_eq!(counter.0.load(std::sync::atomic::Ordering::SeqCst), 1089);
    }

    #[test]
    fn zero_noise_matches_noiseless_bitwise() {
        let g = torus(16);
        let oracle = FreeExactSolver::from_config(&SolverConfig::default());
        let basis = TorusBasis::new(&g, 2).unwrap();
        let a = fit(&oracle, &basis, FitConfig { noise_rel: 0.0, seed: 5, ..Default::default() }).unwrap();
        let b = fit(&oracle, &basis, FitConfig::noiseless(5)).unwrap();
        assert_eq!(a.columns(), b.columns());
    }

    #[test]
    fn solver_failure_names_index() {
        let g = torus(16);
        let err = fit(&Failing, &TorusBasis::new(&g, 2).unwrap(), FitConfig::noiseless(0)).unwrap_err();
        match err {
            Error::Query { index, .. } => assert_eq!(index, "[1, 1]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn apply_on_modes() {
        let g = torus(16);
        let est = exact_fit(&g, 2);
        let outside = Field::fourier_mode(&g, [3, 0]).unwrap();
        assert!(est.apply(&outside).unwrap().l2_norm() < 1e-13);
        let inside = Field::fourier_mode(&g, [1, -2]).unwrap();
        let w = est.column([1, -2]).unwrap().to_vec();
        let expected = CoeffMap::from_entries(&g, w).unwrap().inverse_coeffs();
        assert!(est.apply(&inside).unwrap().difference(&expected).unwrap().l2_norm() < 1e-13);
    }

    #[test]
    fn apply_matches_dense_matrix() {
        let g = torus(8);
        let oracle = crate::solver::SplitStepSolver::new(
            &g,
            &crate::potentials::Potential::HarmonicOscillator(Default::default()),
            SolverConfig::default(),
        )
        .unwrap();
        let est = fit(&oracle, &TorusBasis::new(&g, 2).unwrap(), FitConfig::noiseless(0)).unwrap();
        let psi = random_field(&g, 3);
        let c = psi.forward_coeffs();
        let mut dense = vec![C64::new(0.0, 0.0); g.len()];
        for (row, out) in dense.iter_mut().enumerate() {
            for (&k, col) in est.indices().iter().zip(est.columns()) {
                *out += col[row] * c.get(k).unwrap();
            }
        }
        let expected = CoeffMap::from_entries(&g, dense).unwrap().inverse_coeffs();
        let got = est.apply(&psi).unwrap();
        assert!(got.difference(&expected).unwrap().l2_norm() < 1e-12);
    }

    #[test]
    fn free_exact_fit_is_truncated_free_flow() {
        let g = torus(16);
        let est = exact_fit(&g, 4);
        let psi = random_field(&g, 4);
        let projected = psi.forward_coeffs().truncated(4).inverse_coeffs();
        let expected = free_exact(&projected, 0.1, 1.0, 1.0);
        assert!(est.apply(&psi).unwrap().difference(&expected).unwrap().l2_norm() < 1e-10);
        assert!(est.apply(&psi).unwrap().difference(&est.apply(&projected).unwrap()).unwrap().l2_norm() < 1e-13);
    }

    #[test]
    fn powers_match_repeated_application_and_closed_form() {
        let g = torus(16);
        let est = exact_fit(&g, 4);
        let psi = random_field(&g, 5).forward_coeffs().truncated(4).inverse_coeffs();
        let mut repeated = psi.clone();
        let powers = est.apply_powers(&psi, &[1, 3, 16]).unwrap();
        for q in 1..=16 {
            repeated = est.apply(&repeated).unwrap();
            if let Some(i) = [1, 3, 16].iter().position(|&p| p == q) {
                assert!(powers[i].difference(&repeated).unwrap().l2_norm() < 1e-12);
                let exact = free_exact(&psi, 0.1 * q as f64, 1.0, 1.0);
                assert!(powers[i].difference(&exact).unwrap().l2_norm() < 1e-9);
            }
        }
        assert_eq!(est.apply_power(&psi, 1).unwrap(), est.apply(&psi).unwrap());
        assert!(est.apply_powers(&psi, &[0]).is_err());
        assert!(est.apply_powers(&psi, &[4, 2]).is_err());
    }

    #[test]
    fn unitarity_report_for_exact_fit() {
        let g = torus(16);
        let est = exact_fit(&g, 3);
        let r = est.weak_unitarity_report(50, 100, 7);
        assert!(r.max_gram_error < 1e-9);
        assert!(r.max_expansion <= 1.0 + 1e-9);
        let phi0 = Field::fourier_mode(&g, [0, 0]).unwrap();
        let out = est.apply(&phi0).unwrap();
        assert!((out.inner_product(&out).unwrap().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn noisy_fit_expansion_is_near_one() {
        let g = torus(16);
        let oracle = FreeExactSolver::from_config(&SolverConfig::default());
        let r = 1e-3;
        let est = fit(&oracle, &TorusBasis::new(&g, 3).unwrap(), FitConfig { noise_rel: r, seed: 2, ..Default::default() }).unwrap();
        let rep = est.weak_unitarity_report(10, 100, 7);
        assert!(rep.max_expansion <= 1.0 + 10.0 * r);
    }

    #[test]
    fn masking_never_expands() {
        let g = torus(16);
        let oracle = FreeExactSolver::from_config(&SolverConfig::default());
        let basis = TorusBasis::new(&g, 3).unwrap();
        for gran in [MaskGranularity::PerDataset, MaskGranularity::PerSample] {
            let cfg = FitConfig { mask_p: 0.3, mask_granularity: gran, seed: 3, ..Default::default() };
            let est = fit(&oracle, &basis, cfg).unwrap();
            assert!(est.weak_unitarity_report(0, 200, 1).max_expansion <= 1.0 + 1e-9);
            // Free evolution is diagonal, so each response has one nonzero entry.
            let zeroed = basis
                .queried_indices()
                .iter()
                .filter(|&&k| est.column(k).unwrap()[basis.coeff_position(k).unwrap()].norm() == 0.0)
                .count();
            assert!(zeroed > 0 && zeroed < basis.queried_indices().len());
        }
    }

    #[test]
    fn update_queries_only_new_shells() {
        let g = torus(16);
        let counter = Counting(Default::default());
        let cfg = FitConfig { noise_rel: 1e-3, seed: 11, ..Default::default() };
        let small = fit(&counter, &TorusBasis::new(&g, 1).unwrap(), cfg).unwrap();
        let before = counter.0.load(std::sync::atomic::Ordering::SeqCst);
        let (same, zero) = small.update(&counter, 1).unwrap();
        assert_eq!(zero, 0);
        assert_eq!(same.columns(), small.columns());
        let (grown, added) = small.update(&counter, 2).unwrap();
        assert_eq!(added, 16);
        assert_eq!(counter.0.load(std::sync::atomic::Ordering::SeqCst) - before, 16);
        let fresh = fit(&counter, &TorusBasis::new(&g, 2).unwrap(), cfg).unwrap();
        assert_eq!(grown.indices(), fresh.indices());
        assert_eq!(grown.columns(), fresh.columns());
        assert!(small.update(&counter, 0).is_err());
    }

    #[test]
    fn persistence_roundtrip() {
        let g = torus(8);
        let est = exact_fit(&g, 2);
        let mut buf = Vec::new();
        est.write_to(&mut buf).unwrap();
        match AnyEstimator::read_from(std::io::Cursor::new(&buf)).unwrap() {
            AnyEstimator::Torus(back) => {
                assert_eq!(back.columns(), est.columns());
                assert_eq!(back.metadata(), est.metadata());
            }
            AnyEstimator::Sphere(_) => panic!("wrong basis"),
        }
        assert!(AnyEstimator::read_from(std::io::Cursor::new(&buf[..buf.len() - 3])).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn apply_is_linear(seed in 0u64..1000, ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0, bi in -2.0f64..2.0) {
            let g = torus(8);
            let oracle = FreeExactSolver::from_config(&SolverConfig::default());
            let est = fit(&oracle, &TorusBasis::new(&g, 2).unwrap(), FitConfig { noise_rel: 1e-2, seed, ..Default::default() }).unwrap();
            let (u, v) = (random_field(&g, seed), random_field(&g, seed + 1));
            let (a, b) = (C64::new(ar, ai), C64::new(br, bi));
            let mut combo = u.clone().scaled(a);
            combo.add_assign(&v.clone().scaled(b)).unwrap();
            let lhs = est.apply(&combo).unwrap();
            let mut rhs = est.apply(&u).unwrap().scaled(a);
            rhs.add_assign(&est.apply(&v).unwrap().scaled(b)).unwrap();
            prop_assert!(lhs.difference(&rhs).unwrap().l2_norm() < 1e-12);
        }

        #[test]
        fn exact_fit_is_contraction(seed in 0u64..10_000) {
            let g = torus(16);
            let est = exact_fit(&g, 3);
            let u = random_field(&g, seed);
            for q in [1usize, 4, 16] {
                prop_assert!(est.apply_power(&u, q).unwrap().l2_norm() <= u.l2_norm() * (1.0 + 1e-9));
            }
        }
    }
}
