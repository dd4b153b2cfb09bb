//! The design objective: infidelity terminal cost plus Tikhonov running cost.
//!
//! The infidelity `½(‖φ_d‖⁴ - |⟨φ_d, ψ(l)⟩|²)` is phase-insensitive, so a
//! global phase on either field never registers. The `‖φ_d‖⁴` term is
//! evaluated from the actual samples rather than assumed to be 1, which
//! keeps the formula honest for unnormalized user targets. The running cost
//! penalizes the squared H¹ seminorm of the controls (or, in the tabulated
//! case, of the whole potential surface).

use ndarray::Array1;

use crate::controls::Control;
use crate::error::Result;
use crate::field::Field;
use crate::grid::{AxialGrid, Grid1D};
use crate::potentials::{PotentialSamples, PotentialTimeline, SeparableTimeline, TabulatedTimeline};
use crate::propagate::propagate_terminal;
use crate::spectral::inner_product;

/// Terminal cost `½(‖φ_d‖⁴ - |⟨φ_d, ψ_l⟩|²)`; lies in `[0, ½]` for
/// unit-norm inputs.
pub fn infidelity(psi_l: &Field, phi_d: &Field, grid: &Grid1D) -> Result<f64> {
    let norm_sq = phi_d.norm_sq(grid);
    let overlap = inner_product(phi_d, psi_l, grid)?;
    Ok(0.5 * (norm_sq * norm_sq - overlap.norm_sqr()))
}

/// Running cost `(γ/2)∫|∂_z u|² dz` by the midpoint rule on first
/// differences of the samples.
pub fn tikhonov_cost_1d(u: &Control, gamma: f64, axial: &AxialGrid) -> f64 {
    let dz = axial.dz;
    let mut acc = 0.0;
    for w in u.samples.windows(2) {
        let d = (w[1] - w[0]) / dz;
        acc += d * d;
    }
    0.5 * gamma * acc * dz
}

/// Running cost over the whole surface, `(γ/2)∬(|∂_x V|² + |∂_z V|²) dx dz`,
/// by first differences: periodic in x (consistent with the transverse
/// discretization), one-sided cells in z.
pub fn tikhonov_cost_2d(v: &TabulatedTimeline, gamma: f64, grid: &Grid1D) -> f64 {
    let (nx, nz) = (v.values.nrows(), v.values.ncols());
    let dx = grid.dx;
    let dz = v.axial.dz;
    let mut acc_x = 0.0;
    for k in 0..nz {
        let col = v.values.column(k);
        let weight = if k == 0 || k == nz - 1 { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for j in 0..nx {
            let d = (col[(j + 1) % nx] - col[j]) / dx;
            s += d * d;
        }
        acc_x += weight * s * dx * dz;
    }
    let mut acc_z = 0.0;
    for k in 0..nz - 1 {
        for j in 0..nx {
            let d = (v.values[(j, k + 1)] - v.values[(j, k)]) / dz;
            acc_z += d * d * dx * dz;
        }
    }
    0.5 * gamma * (acc_x + acc_z)
}

/// One stage of the reduced control problem: everything needed to evaluate
/// the objective as a function of the two controls.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub grid: Grid1D,
    pub axial: AxialGrid,
    pub v0: PotentialSamples,
    pub vl: PotentialSamples,
    pub phi0: Field,
    pub phi_d: Field,
    pub gamma: f64,
}

/// The 2D refinement problem: the objective as a function of the tabulated
/// potential itself.
#[derive(Debug, Clone)]
pub struct PotentialProblem {
    pub grid: Grid1D,
    pub axial: AxialGrid,
    pub phi0: Field,
    pub phi_d: Field,
    pub gamma: f64,
}

/// An objective value split into its two contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluatedObjective {
    pub total: f64,
    pub infidelity: f64,
    pub tikhonov: f64,
}

impl ControlProblem {
    pub fn timeline(&self, u: Control, v: Control) -> Result<PotentialTimeline> {
        Ok(PotentialTimeline::Separable(SeparableTimeline::new(
            self.v0.clone(),
            self.vl.clone(),
            u,
            v,
            self.axial,
        )?))
    }

    /// The reduced objective `𝒥[u,v]`: propagate forward from φ₀ and add the
    /// running costs of both controls. This single scalar is what both
    /// optimizers minimize.
    pub fn reduced_objective(&self, u: &Control, v: &Control) -> Result<EvaluatedObjective> {
        let timeline = self.timeline(u.clone(), v.clone())?;
        let psi_l = propagate_terminal(&self.phi0, &timeline, &self.axial, &self.grid)?;
        let inf = infidelity(&psi_l, &self.phi_d, &self.grid)?;
        let tik = tikhonov_cost_1d(u, self.gamma, &self.axial)
            + tikhonov_cost_1d(v, self.gamma, &self.axial);
        Ok(EvaluatedObjective {
            total: inf + tik,
            infidelity: inf,
            tikhonov: tik,
        })
    }

    /// Terminal field under the given controls.
    pub fn terminal_field(&self, u: &Control, v: &Control) -> Result<Field> {
        let timeline = self.timeline(u.clone(), v.clone())?;
        propagate_terminal(&self.phi0, &timeline, &self.axial, &self.grid)
    }
}

impl PotentialProblem {
    /// The reduced objective over a tabulated potential surface.
    pub fn reduced_objective(&self, v: &TabulatedTimeline) -> Result<EvaluatedObjective> {
        let timeline = PotentialTimeline::Tabulated(v.clone());
        let psi_l = propagate_terminal(&self.phi0, &timeline, &self.axial, &self.grid)?;
        let inf = infidelity(&psi_l, &self.phi_d, &self.grid)?;
        let tik = tikhonov_cost_2d(v, self.gamma, &self.grid);
        Ok(EvaluatedObjective {
            total: inf + tik,
            infidelity: inf,
            tikhonov: tik,
        })
    }
}
