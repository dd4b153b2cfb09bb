//! Complex transverse field samples with L² norm semantics.

use ndarray::Array1;
use num_complex::Complex64;

use crate::grid::Grid1D;

/// A complex-valued transverse amplitude sampled on a [`Grid1D`].
///
/// The L² norm and inner products are dx-weighted Riemann sums, which are
/// spectrally accurate for the periodic, decaying profiles used here.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Array1<Complex64>,
}

impl Field {
    pub fn new(values: Array1<Complex64>) -> Self {
        Self { values }
    }

    /// Builds a field from real samples (imaginary part zero).
    pub fn from_real(values: &Array1<f64>) -> Self {
        Self {
            values: values.mapv(|v| Complex64::new(v, 0.0)),
        }
    }

    /// Samples a real-valued profile on the grid.
    pub fn sample_real(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: Array1::from_iter((0..grid.n).map(|j| Complex64::new(f(grid.x(j)), 0.0))),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Squared L² norm, `Σ |f_j|² dx`.
    pub fn norm_sq(&self, grid: &Grid1D) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx
    }

    /// L² norm.
    pub fn norm(&self, grid: &Grid1D) -> f64 {
        self.norm_sq(grid).sqrt()
    }

    /// Returns the field scaled to unit L² norm.
    pub fn normalized(&self, grid: &Grid1D) -> Self {
        let n = self.norm(grid);
        Self {
            values: self.values.mapv(|v| v / n),
        }
    }

    /// Real parts of the samples.
    pub fn re(&self) -> Array1<f64> {
        self.values.mapv(|v| v.re)
    }

    /// Pointwise intensity `|f_j|²`.
    pub fn intensity(&self) -> Array1<f64> {
        self.values.mapv(|v| v.norm_sqr())
    }

    /// True when every sample is finite.
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}
