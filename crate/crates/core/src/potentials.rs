//! Waveguide potentials, target profiles, and potential timelines.
//!
//! The potential is proportional to the square of the transverse refractive
//! index profile and is always real. Two timeline representations exist: the
//! separable form `V(x,z) = u(z)V₀(x) + v(z)V_l(x)` searched by the reduced
//! optimizers, and a fully tabulated `V(x,z)` used by the 2D refinement.

use ndarray::{Array1, Array2};

use crate::controls::Control;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{AxialGrid, Grid1D};

/// Real potential samples on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSamples {
    pub values: Array1<f64>,
}

impl PotentialSamples {
    pub fn new(values: Array1<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("potential has non-finite samples".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(grid: &Grid1D) -> Self {
        Self {
            values: Array1::zeros(grid.n),
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

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Pöschl–Teller well `-σ(σ+1)/2 · sech²(x - center)`.
pub fn poschl_teller(sigma: f64, center: f64, grid: &Grid1D) -> PotentialSamples {
    let depth = -sigma * (sigma + 1.0) / 2.0;
    PotentialSamples {
        values: grid.sample(|x| {
            let s = (x - center).cosh().recip();
            depth * s * s
        }),
    }
}

/// Normalized top-hat target `A·exp(-a·x^m)` with even `m`; `A` is fixed by
/// unit L² norm. Exponent underflow flushes to zero.
pub fn tophat_target(a: f64, m: u32, grid: &Grid1D) -> Result<Field> {
    if !(a > 0.0) {
        return Err(Error::InvalidConfig("top-hat parameter a must be positive".into()));
    }
    if m == 0 || m % 2 != 0 {
        return Err(Error::InvalidConfig("top-hat exponent m must be even and positive".into()));
    }
    let raw = Field::sample_real(grid, |x| {
        let arg = -a * x.powi(m as i32);
        if arg < -700.0 {
            0.0
        } else {
            arg.exp()
        }
    });
    Ok(raw.normalized(grid))
}

/// Initial configuration for the beam-addition problem: three separated
/// Pöschl–Teller wells with σ = 1 and the matching three-lobe profile,
/// renormalized on the grid. The profile is not exactly an eigenfunction but
/// approximates one with improving accuracy as the spacing grows.
pub fn beam_combine_initial(a: f64, grid: &Grid1D) -> Result<(PotentialSamples, Field)> {
    if !(a > 0.0) {
        return Err(Error::InvalidConfig("well spacing a must be positive".into()));
    }
    let v0 = PotentialSamples {
        values: grid.sample(|x| {
            let s = |y: f64| (y).cosh().recip().powi(2);
            -(s(x - a) + s(x + a) + s(x))
        }),
    };
    let phi0 = Field::sample_real(grid, |x| {
        let s = |y: f64| (y).cosh().recip();
        -(s(x - a) + s(x + a) + s(x)) / 6.0_f64.sqrt()
    })
    .normalized(grid);
    Ok((v0, phi0))
}

/// Separable potential timeline `V(x,z) = u(z)V₀(x) + v(z)V_l(x)` with the
/// coupler boundary conditions `u(z0)=1, u(z1)=0, v(z0)=0, v(z1)=1`.
#[derive(Debug, Clone)]
pub struct SeparableTimeline {
    pub v0: PotentialSamples,
    pub vl: PotentialSamples,
    pub u: Control,
    pub v: Control,
    pub axial: AxialGrid,
}

impl SeparableTimeline {
    pub fn new(
        v0: PotentialSamples,
        vl: PotentialSamples,
        u: Control,
        v: Control,
        axial: AxialGrid,
    ) -> Result<Self> {
        if v0.len() != vl.len() {
            return Err(Error::LengthMismatch {
                expected: v0.len(),
                got: vl.len(),
            });
        }
        for c in [&u, &v] {
            if c.samples.len() != axial.n_samples() {
                return Err(Error::LengthMismatch {
                    expected: axial.n_samples(),
                    got: c.samples.len(),
                });
            }
        }
        Ok(Self { v0, vl, u, v, axial })
    }

    /// Timeline with pure linear-ramp controls: the trivial coupler design.
    pub fn with_ramps(v0: PotentialSamples, vl: PotentialSamples, axial: &AxialGrid) -> Result<Self> {
        let u = Control::ramp(1.0, 0.0, axial);
        let v = Control::ramp(0.0, 1.0, axial);
        Self::new(v0, vl, u, v, *axial)
    }
}

/// Fully tabulated timeline: `n_x` rows by `n_slices` columns of `V(x, z)`
/// on its own (possibly coarser) uniform axial grid.
#[derive(Debug, Clone)]
pub struct TabulatedTimeline {
    pub values: Array2<f64>,
    pub axial: AxialGrid,
}

impl TabulatedTimeline {
    pub fn new(values: Array2<f64>, axial: AxialGrid) -> Result<Self> {
        if values.ncols() != axial.n_samples() {
            return Err(Error::LengthMismatch {
                expected: axial.n_samples(),
                got: values.ncols(),
            });
        }
        Ok(Self { values, axial })
    }
}

/// Either representation of the design potential over the axial interval.
#[derive(Debug, Clone)]
pub enum PotentialTimeline {
    Separable(SeparableTimeline),
    Tabulated(TabulatedTimeline),
}

impl PotentialTimeline {
    pub fn axial_interval(&self) -> (f64, f64) {
        match self {
            PotentialTimeline::Separable(t) => (t.axial.z0, t.axial.z1),
            PotentialTimeline::Tabulated(t) => (t.axial.z0, t.axial.z1),
        }
    }

    pub fn n_x(&self) -> usize {
        match self {
            PotentialTimeline::Separable(t) => t.v0.len(),
            PotentialTimeline::Tabulated(t) => t.values.nrows(),
        }
    }

    /// Writes `V(·, z)` into `out`; controls and tabulated slices are both
    /// interpolated linearly between their z-samples.
    pub fn slice_into(&self, z: f64, out: &mut [f64]) -> Result<()> {
        let (z0, z1) = self.axial_interval();
        let tol = 1e-9 * (z1 - z0).abs();
        if z < z0 - tol || z > z1 + tol {
            return Err(Error::AxialOutOfRange { z, z0, z1 });
        }
        match self {
            PotentialTimeline::Separable(t) => {
                let u = t.u.eval(z, &t.axial);
                let v = t.v.eval(z, &t.axial);
                for ((o, &a), &b) in out.iter_mut().zip(t.v0.values.iter()).zip(t.vl.values.iter()) {
                    *o = u * a + v * b;
                }
            }
            PotentialTimeline::Tabulated(t) => {
                let n = t.axial.n_samples();
                let s = ((z - t.axial.z0) / t.axial.dz).clamp(0.0, (n - 1) as f64);
                let i = (s.floor() as usize).min(n - 2);
                let w = s - i as f64;
                let c0 = t.values.column(i);
                let c1 = t.values.column(i + 1);
                for ((o, &a), &b) in out.iter_mut().zip(c0.iter()).zip(c1.iter()) {
                    *o = (1.0 - w) * a + w * b;
                }
            }
        }
        Ok(())
    }

    /// Convenience alloc variant of [`Self::slice_into`].
    pub fn assemble_slice(&self, z: f64) -> Result<PotentialSamples> {
        let mut out = vec![0.0; self.n_x()];
        self.slice_into(z, &mut out)?;
        Ok(PotentialSamples {
            values: Array1::from_vec(out),
        })
    }
}

/// Tabulates any timeline on the given axial grid. Endpoint slices are
/// copied exactly (no interpolation) so boundary identities survive.
pub fn tabulate(timeline: &PotentialTimeline, axial: &AxialGrid) -> Result<TabulatedTimeline> {
    let n_x = timeline.n_x();
    let mut values = Array2::zeros((n_x, axial.n_samples()));
    let mut buf = vec![0.0; n_x];
    for k in 0..axial.n_samples() {
        timeline.slice_into(axial.z(k), &mut buf)?;
        for (j, &b) in buf.iter().enumerate() {
            values[(j, k)] = b;
        }
    }
    TabulatedTimeline::new(values, *axial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn grid() -> Grid1D {
        Grid1D::new(-5.0 * PI, 5.0 * PI, 1024).unwrap()
    }

    #[test]
    fn poschl_teller_depths() {
        let g = Grid1D::new(-16.0, 16.0, 1024).unwrap();
        // x = 0 is a grid point of this symmetric even grid
        let v1 = poschl_teller(1.0, 0.0, &g);
        let j0 = g.n / 2;
        assert_abs_diff_eq!(v1.values[j0], -1.0, epsilon = 1e-14);
        let v3 = poschl_teller(3.0, 0.0, &g);
        assert_abs_diff_eq!(v3.values[j0], -6.0, epsilon = 1e-14);
    }

    #[test]
    fn poschl_teller_decays_to_nothing() {
        let g = Grid1D::new(-40.0, 40.0, 1024).unwrap();
        let v = poschl_teller(2.5, 0.0, &g);
        for (j, val) in v.values.iter().enumerate() {
            if (g.x(j)).abs() >= 20.0 {
                assert!(val.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sigma_one_is_exactly_minus_sech_squared() {
        let g = grid();
        let v = poschl_teller(1.0, 0.0, &g);
        for (j, val) in v.values.iter().enumerate() {
            let s = g.x(j).cosh().recip();
            assert_abs_diff_eq!(*val, -s * s, epsilon = 1e-15);
        }
    }

    #[test]
    fn tophat_is_normalized_even_and_peaked_at_a() {
        let g = grid();
        let f = tophat_target(1e-3, 8, &g).unwrap();
        assert_abs_diff_eq!(f.norm(&g), 1.0, epsilon = 1e-10);
        // even symmetry on the symmetric grid: x_j and -x_j are both points
        // for j >= 1 (x_0 = x_min has no mirror)
        for j in 1..g.n / 2 {
            assert_eq!(f.values[j].re, f.values[g.n - j].re);
        }
        // the peak value is the normalization constant
        let peak = f.values[g.n / 2].re;
        let a_from_norm = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert_abs_diff_eq!(peak, a_from_norm, epsilon = 1e-15);
    }

    #[test]
    fn tophat_normalization_sweep() {
        let g = grid();
        for &a in &[1e-4, 1e-3, 1e-2, 1e-1] {
            for &m in &[2u32, 4, 8] {
                let f = tophat_target(a, m, &g).unwrap();
                assert_abs_diff_eq!(f.norm(&g), 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn tophat_rejects_bad_parameters() {
        let g = grid();
        assert!(tophat_target(0.0, 8, &g).is_err());
        assert!(tophat_target(1e-3, 7, &g).is_err());
    }

    #[test]
    fn beam_combine_has_three_wells_and_unit_norm() {
        let g = Grid1D::new(-15.0 * PI, 15.0 * PI, 4096).unwrap();
        let (v0, phi0) = beam_combine_initial(10.0, &g).unwrap();
        assert_abs_diff_eq!(phi0.norm(&g), 1.0, epsilon = 1e-10);
        // wells centered near -10, 0, 10: V is close to -1 there
        for center in [-10.0, 0.0, 10.0] {
            let j = ((center - g.x_min) / g.dx).round() as usize;
            assert!(v0.values[j] < -0.99, "no well at {center}");
        }
    }

    #[test]
    fn separable_slices_hit_the_boundary_potentials_exactly() {
        let g = grid();
        let axial = AxialGrid::new(0.0, 7.0, 100).unwrap();
        let v0 = poschl_teller(1.0, 0.0, &g);
        let vl = poschl_teller(2.0, 1.0, &g);
        let t = PotentialTimeline::Separable(
            SeparableTimeline::with_ramps(v0.clone(), vl.clone(), &axial).unwrap(),
        );
        let s0 = t.assemble_slice(0.0).unwrap();
        assert_eq!(s0.values, v0.values);
        let s1 = t.assemble_slice(7.0).unwrap();
        assert_eq!(s1.values, vl.values);
        // u = v = 1/2 at the middle of the ramps
        let sm = t.assemble_slice(3.5).unwrap();
        for ((m, &a), &b) in sm.values.iter().zip(v0.values.iter()).zip(vl.values.iter()) {
            assert_abs_diff_eq!(*m, 0.5 * (a + b), epsilon = 1e-12);
        }
    }

    #[test]
    fn slice_is_linear_in_the_controls() {
        let g = grid();
        let axial = AxialGrid::new(0.0, 7.0, 50).unwrap();
        let v0 = poschl_teller(1.0, 0.0, &g);
        let vl = poschl_teller(2.0, 0.0, &g);
        let base = SeparableTimeline::with_ramps(v0.clone(), vl.clone(), &axial).unwrap();
        let doubled = SeparableTimeline::new(
            v0,
            vl,
            Control::new(base.u.samples.mapv(|x| 2.0 * x)).unwrap(),
            Control::new(base.v.samples.mapv(|x| 2.0 * x)).unwrap(),
            axial,
        )
        .unwrap();
        let z = 2.31;
        let s1 = PotentialTimeline::Separable(base).assemble_slice(z).unwrap();
        let s2 = PotentialTimeline::Separable(doubled).assemble_slice(z).unwrap();
        for (a, b) in s1.values.iter().zip(s2.values.iter()) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn out_of_range_slice_is_an_error() {
        let g = grid();
        let axial = AxialGrid::new(0.0, 7.0, 50).unwrap();
        let t = PotentialTimeline::Separable(
            SeparableTimeline::with_ramps(
                poschl_teller(1.0, 0.0, &g),
                poschl_teller(2.0, 0.0, &g),
                &axial,
            )
            .unwrap(),
        );
        assert!(t.assemble_slice(-0.5).is_err());
        assert!(t.assemble_slice(7.5).is_err());
    }

    #[test]
    fn tabulated_boundary_slices_are_exact() {
        let g = grid();
        let axial = AxialGrid::new(0.0, 7.0, 40).unwrap();
        let v0 = poschl_teller(1.0, 0.0, &g);
        let vl = poschl_teller(2.0, 0.0, &g);
        let sep = PotentialTimeline::Separable(
            SeparableTimeline::with_ramps(v0.clone(), vl.clone(), &axial).unwrap(),
        );
        let tab = tabulate(&sep, &axial).unwrap();
        for j in 0..g.n {
            assert_eq!(tab.values[(j, 0)], v0.values[j]);
            assert_eq!(tab.values[(j, 40)], vl.values[j]);
        }
    }
}
