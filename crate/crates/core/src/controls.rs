//! Control functions of the axial coordinate and their Galerkin ansatz.
//!
//! A control is a real function on `[z0, z1]` with pinned endpoint values,
//! stored as samples on the propagation grid. The reduced search space is a
//! sine series with quadratically decaying mode amplitudes riding on the
//! linear ramp between the boundary values:
//!
//! ```text
//! u(z) = u0 + (ul - u0)·(z - z0)/l + Σ_{j=1}^{N} (ε_j / j²)·sin(jπ(z - z0)/l)
//! ```
//!
//! Endpoint samples are assigned exactly, never through the sine evaluation,
//! so admissibility is preserved bit-for-bit by everything downstream.

use ndarray::Array1;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::AxialGrid;

/// Default number of sine modes per control.
pub const DEFAULT_MODES: usize = 15;

/// A sampled control with fixed endpoint values.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    /// Samples on the propagation z-grid, `n_steps + 1` values.
    pub samples: Array1<f64>,
    /// Value at `z0`; equals `samples[0]` exactly.
    pub u0: f64,
    /// Value at `z1`; equals `samples[last]` exactly.
    pub ul: f64,
}

impl Control {
    pub fn new(samples: Array1<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidConfig(
                "a control needs at least two samples".into(),
            ));
        }
        let u0 = samples[0];
        let ul = samples[samples.len() - 1];
        Ok(Self { samples, u0, ul })
    }

    /// Linear ramp between `u0` and `ul` on the axial grid.
    pub fn ramp(u0: f64, ul: f64, axial: &AxialGrid) -> Self {
        let n = axial.n_samples();
        let mut samples = Array1::zeros(n);
        for k in 0..n {
            let t = k as f64 / axial.n_steps as f64;
            samples[k] = u0 + (ul - u0) * t;
        }
        samples[0] = u0;
        samples[n - 1] = ul;
        Self { samples, u0, ul }
    }

    /// Value at axial coordinate `z` by linear interpolation between samples.
    pub fn eval(&self, z: f64, axial: &AxialGrid) -> f64 {
        let n = self.samples.len();
        let s = ((z - axial.z0) / axial.dz).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        self.samples[i] * (1.0 - t) + self.samples[i + 1] * t
    }

    /// Value at the midpoint of step `k`, the only points the propagator queries.
    #[inline]
    pub fn midpoint(&self, k: usize) -> f64 {
        0.5 * (self.samples[k] + self.samples[k + 1])
    }
}

/// Coefficients of the sine-series ansatz for one control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzCoefficients {
    /// Raw amplitudes ε_j, one per mode; the quadratic decay `1/j²` is
    /// applied at evaluation time. The global search draws these from
    /// `[-1, 1]` and keeps them there.
    pub eps: Vec<f64>,
    pub n_modes: usize,
    /// Boundary values `(u0, ul)`.
    pub boundary: (f64, f64),
    /// Axial interval `(z0, z1)`.
    pub interval: (f64, f64),
}

impl AnsatzCoefficients {
    pub fn new(eps: Vec<f64>, boundary: (f64, f64), interval: (f64, f64)) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::InvalidConfig("ansatz needs at least one mode".into()));
        }
        if !(interval.1 > interval.0) {
            return Err(Error::InvalidConfig("ansatz interval is degenerate".into()));
        }
        let n_modes = eps.len();
        Ok(Self {
            eps,
            n_modes,
            boundary,
            interval,
        })
    }

    /// All-zero coefficients: the pure linear ramp.
    pub fn zero(n_modes: usize, boundary: (f64, f64), interval: (f64, f64)) -> Self {
        Self {
            eps: vec![0.0; n_modes],
            n_modes,
            boundary,
            interval,
        }
    }
}

/// Evaluates the ansatz on the axial grid. Endpoint samples are set to the
/// boundary values exactly.
pub fn evaluate_ansatz(coeffs: &AnsatzCoefficients, axial: &AxialGrid) -> Result<Control> {
    let (z0, z1) = coeffs.interval;
    if (axial.z0 - z0).abs() > 1e-12 * z1.abs().max(1.0)
        || (axial.z1 - z1).abs() > 1e-12 * z1.abs().max(1.0)
    {
        return Err(Error::InvalidConfig(format!(
            "axial grid [{}, {}] does not match ansatz interval [{z0}, {z1}]",
            axial.z0, axial.z1
        )));
    }
    let (u0, ul) = coeffs.boundary;
    let l = axial.length();
    let n = axial.n_samples();
    let mut samples = Array1::zeros(n);
    for k in 1..n - 1 {
        let t = (axial.z(k) - axial.z0) / l;
        let mut v = u0 + (ul - u0) * t;
        for (i, &e) in coeffs.eps.iter().enumerate() {
            let j = (i + 1) as f64;
            v += e / (j * j) * (j * std::f64::consts::PI * t).sin();
        }
        samples[k] = v;
    }
    samples[0] = u0;
    samples[n - 1] = ul;
    Ok(Control { samples, u0, ul })
}

/// Draws raw amplitudes uniformly from `[-1, 1]`, independently per mode.
/// Deterministic for a fixed seed.
pub fn sample_random_coefficients(
    seed: u64,
    n_modes: usize,
    boundary: (f64, f64),
    interval: (f64, f64),
) -> Result<AnsatzCoefficients> {
    if n_modes == 0 {
        return Err(Error::InvalidConfig("ansatz needs at least one mode".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps: Vec<f64> = (0..n_modes).map(|_| rng.random_range(-1.0..=1.0)).collect();
    AnsatzCoefficients::new(eps, boundary, interval)
}

/// Projects a sampled control back onto the sine basis: subtract the linear
/// ramp, take a type-I discrete sine transform of the interior samples, keep
/// `n_modes` modes, and undo the `1/j²` decay. Round trip with
/// [`evaluate_ansatz`] is exact for in-span controls.
pub fn control_to_coefficients(
    control: &Control,
    axial: &AxialGrid,
    n_modes: usize,
) -> Result<AnsatzCoefficients> {
    if control.samples.len() != axial.n_samples() {
        return Err(Error::LengthMismatch {
            expected: axial.n_samples(),
            got: control.samples.len(),
        });
    }
    let m = axial.n_steps; // interior samples are 1..m
    let (u0, ul) = (control.u0, control.ul);
    let mut eps = vec![0.0; n_modes];
    for (i, e) in eps.iter_mut().enumerate() {
        let j = (i + 1) as f64;
        let mut acc = 0.0;
        for k in 1..m {
            let t = k as f64 / m as f64;
            let resid = control.samples[k] - (u0 + (ul - u0) * t);
            acc += resid * (j * std::f64::consts::PI * t).sin();
        }
        *e = 2.0 / m as f64 * acc * j * j;
    }
    AnsatzCoefficients::new(eps, (u0, ul), (axial.z0, axial.z1))
}
