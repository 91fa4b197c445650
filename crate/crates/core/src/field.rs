use crate::{Error, Result, C64};

/// A complex function sampled on a grid with a quadrature rule.
///
/// Implemented by torus fields and sphere fields so that noise injection,
/// masking and error metrics are written once.
pub trait GridFunction: Clone + Send + Sync {
    fn values(&self) -> &[C64];

    fn values_mut(&mut self) -> &mut [C64];

    /// Total measure of the domain.
    fn volume(&self) -> f64;

    fn same_grid(&self, other: &Self) -> bool;

    /// Quadrature inner product `⟨self, other⟩ = Σ w_j self_j conj(other_j)`.
    fn inner_product(&self, other: &Self) -> Result<C64>;

    fn l2_norm(&self) -> f64 {
        self.inner_product(self)
            .map(|z| z.re.max(0.0).sqrt())
            .unwrap_or(f64::NAN)
    }

    fn scale(&mut self, factor: C64) {
        self.values_mut().iter_mut().for_each(|v| *v *= factor);
    }

    /// `self - other`, checked to live on the same grid.
    fn difference(&self, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        out.values_mut()
            .iter_mut()
            .zip(other.values())
            .for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}
