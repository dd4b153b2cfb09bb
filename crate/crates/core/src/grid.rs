//! Transverse and axial grids.
//!
//! The transverse direction uses a uniform periodic grid (`x_max` is
//! identified with `x_min`), matching the Fourier discretization used for
//! all spatial derivatives. The axial direction uses a uniform step grid
//! whose samples include both interval endpoints.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic transverse grid with `n` points on `[x_min, x_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    /// Number of points; a power of two, at least 8.
    pub n: usize,
    /// Spacing `(x_max - x_min) / n`.
    pub dx: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(Error::InvalidGrid(format!(
                "x_max ({x_max}) must exceed x_min ({x_min})"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n ({n}) must be a power of two >= 8"
            )));
        }
        let dx = (x_max - x_min) / n as f64;
        Ok(Self { x_min, x_max, n, dx })
    }

    /// Grid point `x_j = x_min + j*dx` (periodic convention: `x_max` is not stored).
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    /// All grid points as an array.
    pub fn points(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n).map(|j| self.x(j)))
    }

    /// Period of the grid, `x_max - x_min`.
    #[inline]
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Samples a real function on the grid.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Array1<f64> {
        Array1::from_iter((0..self.n).map(|j| f(self.x(j))))
    }
}

/// Uniform axial step grid on `[z0, z1]` with `n_steps` steps and
/// `n_steps + 1` stored sample points `z_k = z0 + k*dz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialGrid {
    pub z0: f64,
    pub z1: f64,
    pub n_steps: usize,
    /// Step `(z1 - z0) / n_steps`.
    pub dz: f64,
}

impl AxialGrid {
    pub fn new(z0: f64, z1: f64, n_steps: usize) -> Result<Self> {
        if !(z1 > z0) {
            return Err(Error::InvalidGrid(format!(
                "z1 ({z1}) must exceed z0 ({z0})"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be positive".into()));
        }
        let dz = (z1 - z0) / n_steps as f64;
        Ok(Self { z0, z1, n_steps, dz })
    }

    /// Sample point `z_k`, for `k = 0..=n_steps`.
    #[inline]
    pub fn z(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.z1
        } else {
            self.z0 + k as f64 * self.dz
        }
    }

    /// Midpoint of step `k`, i.e. `z_k + dz/2`.
    #[inline]
    pub fn midpoint(&self, k: usize) -> f64 {
        self.z0 + (k as f64 + 0.5) * self.dz
    }

    /// Number of stored samples, `n_steps + 1`.
    #[inline]
    pub fn n_samples(&self) -> usize {
        self.n_steps + 1
    }

    /// Propagation length `z1 - z0`.
    #[inline]
    pub fn length(&self) -> f64 {
        self.z1 - self.z0
    }

    /// All sample points.
    pub fn points(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n_samples()).map(|k| self.z(k)))
    }

    /// Same interval with the step count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self::new(self.z0, self.z1, self.n_steps * factor).expect("valid by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_and_spacing() {
        let g = Grid1D::new(-1.0, 1.0, 8).unwrap();
        assert_eq!(g.dx, 0.25);
        assert_eq!(g.x(0), -1.0);
        assert_eq!(g.x(7), 0.75); // x_max itself is not a stored point
        assert_eq!(g.points().len(), 8);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid1D::new(-1.0, 1.0, 7).is_err());
        assert!(Grid1D::new(-1.0, 1.0, 12).is_err());
        assert!(Grid1D::new(-1.0, 1.0, 4).is_err());
        assert!(Grid1D::new(1.0, -1.0, 16).is_err());
    }

    #[test]
    fn axial_samples_include_both_endpoints() {
        let a = AxialGrid::new(0.0, 7.0, 2000).unwrap();
        assert_eq!(a.n_samples(), 2001);
        assert_eq!(a.z(0), 0.0);
        assert_eq!(a.z(2000), 7.0);
        assert!((a.midpoint(0) - 0.5 * a.dz).abs() < 1e-15);
    }

    #[test]
    fn axial_rejects_degenerate_intervals() {
        assert!(AxialGrid::new(1.0, 1.0, 10).is_err());
        assert!(AxialGrid::new(0.0, 1.0, 0).is_err());
    }
}
