//! Sobolev-projected gradient descent over controls and over the full
//! potential surface.
//!
//! The L² functional derivative of the reduced objective with respect to a
//! control is assembled from one forward and one backward propagation. It
//! does not vanish at the interval endpoints, so stepping along it would
//! leave the admissible class; instead the gradient used for the update is
//! the solution of the Dirichlet Poisson problem `-∂_z² g = δ_u𝒥`,
//! `g(z0) = g(z1) = 0`, which realizes the derivative in `Ḣ¹₀` and pins the
//! control boundary values bit-exactly. The 2D variant does the same on the
//! rectangle with the 5-point Laplacian and the sine-transform solver.
//! Step sizes come from Armijo backtracking on the reduced objective.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cheb::{
    interpolate_cheb_to_uniform, interpolate_uniform_to_cheb, solve_dirichlet_poisson_1d,
    ChebOperator, DEFAULT_POISSON_NODES,
};
use crate::controls::Control;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::objective::{ControlProblem, EvaluatedObjective, PotentialProblem};
use crate::poisson2d::Poisson2D;
use crate::potentials::{PotentialSamples, PotentialTimeline, TabulatedTimeline};
use crate::propagate::{costate_terminal, propagate_backward, propagate_forward, Store, Trajectory};

/// Line-search and termination settings for the descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrapeConfig {
    pub max_iters: usize,
    /// Stop when the L² norm of the projected gradient drops below this.
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Step shrink factor on rejection.
    pub backtrack_ratio: f64,
    /// First trial step, rescaled by 1/‖g‖ each iteration.
    pub initial_step: f64,
    /// Line-search floor; underflow counts as a stall.
    pub min_step: f64,
    /// Keep every k-th trajectory snapshot during gradient assembly.
    pub snapshot_stride: usize,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        Self {
            max_iters: 60,
            grad_tol: 1e-8,
            armijo_c: 1e-4,
            backtrack_ratio: 0.5,
            initial_step: 1.0,
            min_step: 1e-12,
            snapshot_stride: 1,
        }
    }
}

impl GrapeConfig {
    fn validate(&self) -> Result<()> {
        if !(self.min_step < self.initial_step) {
            return Err(Error::InvalidConfig(
                "min_step must be below initial_step".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.armijo_c) || !(0.0..1.0).contains(&self.backtrack_ratio) {
            return Err(Error::InvalidConfig(
                "armijo_c and backtrack_ratio must lie in (0, 1)".into(),
            ));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidConfig("snapshot_stride must be positive".into()));
        }
        Ok(())
    }

    fn store(&self) -> Store {
        if self.snapshot_stride <= 1 {
            Store::Full
        } else {
            Store::Stride(self.snapshot_stride)
        }
    }
}

/// Record of one descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentHistory {
    /// Objective at the start and after each accepted step; non-increasing.
    pub objective_per_iter: Vec<f64>,
    pub infidelity_per_iter: Vec<f64>,
    pub tikhonov_per_iter: Vec<f64>,
    /// Projected-gradient L² norm at each iteration head.
    pub grad_norm_per_iter: Vec<f64>,
    pub accepted_steps: usize,
    /// Set when the line search underflowed before any step was accepted.
    pub stalled: bool,
}

impl DescentHistory {
    fn new(initial: EvaluatedObjective) -> Self {
        Self {
            objective_per_iter: vec![initial.total],
            infidelity_per_iter: vec![initial.infidelity],
            tikhonov_per_iter: vec![initial.tikhonov],
            grad_norm_per_iter: Vec::new(),
            accepted_steps: 0,
            stalled: false,
        }
    }

    fn push(&mut self, obj: EvaluatedObjective) {
        self.objective_per_iter.push(obj.total);
        self.infidelity_per_iter.push(obj.infidelity);
        self.tikhonov_per_iter.push(obj.tikhonov);
        self.accepted_steps += 1;
    }
}

/// L² functional derivative of the reduced objective with respect to one
/// control of the separable form: at interior z-samples,
/// `δ_u𝒥(z_k) = -γ u''(z_k) + Re⟨p(·,z_k), V_b ψ(·,z_k)⟩`, with the second
/// difference for `u''` and the dx-weighted sum for the transverse inner
/// product. Endpoint samples are zero: the control is pinned there.
pub fn l2_control_gradient(
    psi_traj: &Trajectory,
    p_traj: &Trajectory,
    basis_potential: &PotentialSamples,
    u: &Control,
    gamma: f64,
    grid: &Grid1D,
) -> Result<Array1<f64>> {
    if psi_traj.axial != p_traj.axial {
        return Err(Error::InvalidConfig(
            "state and costate trajectories live on different axial grids".into(),
        ));
    }
    let axial = psi_traj.axial;
    let n_samples = axial.n_samples();
    if u.samples.len() != n_samples {
        return Err(Error::LengthMismatch {
            expected: n_samples,
            got: u.samples.len(),
        });
    }
    if basis_potential.len() != grid.n {
        return Err(Error::LengthMismatch {
            expected: grid.n,
            got: basis_potential.len(),
        });
    }
    let dz = axial.dz;
    let mut g = Array1::zeros(n_samples);
    let mut psi_buf = vec![Complex64::ZERO; grid.n];
    let mut p_buf = vec![Complex64::ZERO; grid.n];
    for k in 1..n_samples - 1 {
        let curvature = (u.samples[k - 1] - 2.0 * u.samples[k] + u.samples[k + 1]) / (dz * dz);
        psi_traj.snapshot_into(k, &mut psi_buf);
        p_traj.snapshot_into(k, &mut p_buf);
        let mut overlap = 0.0;
        for ((p, s), &vb) in p_buf.iter().zip(psi_buf.iter()).zip(basis_potential.values.iter()) {
            overlap += (p.conj() * s).re * vb;
        }
        g[k] = -gamma * curvature + overlap * grid.dx;
    }
    Ok(g)
}

/// Projects an L² gradient on the uniform z-grid into `Ḣ¹₀`: interpolate to
/// the Chebyshev nodes, solve the Dirichlet Poisson problem, interpolate
/// back. The output vanishes at both endpoints exactly.
pub fn project_h10(
    l2_grad: &Array1<f64>,
    cheb: &ChebOperator,
    axial: &crate::grid::AxialGrid,
) -> Result<Array1<f64>> {
    let at_nodes = interpolate_uniform_to_cheb(l2_grad, axial, cheb)?;
    let solved = solve_dirichlet_poisson_1d(&at_nodes, cheb)?;
    let mut back = interpolate_cheb_to_uniform(&solved, cheb, axial)?;
    let n = back.len();
    back[0] = 0.0;
    back[n - 1] = 0.0;
    Ok(back)
}

/// Joint Sobolev gradient descent over the `(u, v)` control pair.
///
/// Each iteration propagates the state forward, builds the costate terminal
/// condition `p(l) = -i⟨φ_d, ψ(l)⟩φ_d`, propagates it backward, projects
/// both L² gradients, and takes one shared Armijo-backtracked step on the
/// concatenated direction. Control endpoints never change.
pub fn grape_descend_1d(
    problem: &ControlProblem,
    u_init: &Control,
    v_init: &Control,
    config: &GrapeConfig,
) -> Result<(Control, Control, DescentHistory)> {
    config.validate()?;
    let axial = problem.axial;
    let cheb = ChebOperator::new((axial.z0, axial.z1), DEFAULT_POISSON_NODES)?;
    let store = config.store();
    let dz = axial.dz;

    let mut u = u_init.clone();
    let mut v = v_init.clone();
    let mut current = problem.reduced_objective(&u, &v)?;
    let mut history = DescentHistory::new(current);

    for _iter in 0..config.max_iters {
        let timeline = problem.timeline(u.clone(), v.clone())?;
        let psi_traj = propagate_forward(&problem.phi0, &timeline, &axial, &problem.grid, store)?;
        let p_l = costate_terminal(&problem.phi_d, &psi_traj.terminal(), &problem.grid)?;
        let p_traj = propagate_backward(&p_l, &timeline, &axial, &problem.grid, store)?;

        let gu = l2_control_gradient(&psi_traj, &p_traj, &problem.v0, &u, problem.gamma, &problem.grid)?;
        let gv = l2_control_gradient(&psi_traj, &p_traj, &problem.vl, &v, problem.gamma, &problem.grid)?;
        let hu = project_h10(&gu, &cheb, &axial)?;
        let hv = project_h10(&gv, &cheb, &axial)?;

        let grad_norm_sq = (hu.iter().map(|x| x * x).sum::<f64>()
            + hv.iter().map(|x| x * x).sum::<f64>())
            * dz;
        let grad_norm = grad_norm_sq.sqrt();
        history.grad_norm_per_iter.push(grad_norm);
        if grad_norm < config.grad_tol {
            break;
        }

        let mut alpha = config.initial_step / grad_norm;
        let mut accepted = false;
        while alpha >= config.min_step {
            let u_trial = Control::new(Array1::from_iter(
                u.samples.iter().zip(hu.iter()).map(|(a, b)| a - alpha * b),
            ))?;
            let v_trial = Control::new(Array1::from_iter(
                v.samples.iter().zip(hv.iter()).map(|(a, b)| a - alpha * b),
            ))?;
            let trial = problem.reduced_objective(&u_trial, &v_trial)?;
            if trial.total <= current.total - config.armijo_c * alpha * grad_norm_sq {
                u = u_trial;
                v = v_trial;
                current = trial;
                accepted = true;
                break;
            }
            alpha *= config.backtrack_ratio;
        }
        if !accepted {
            if history.accepted_steps == 0 {
                history.stalled = true;
                return Ok((u_init.clone(), v_init.clone(), history));
            }
            break;
        }
        history.push(current);
    }
    Ok((u, v, history))
}

/// L² functional derivative of the 2D reduced objective with respect to the
/// tabulated potential: `δ_V𝒥(x,z) = -γ ∇²_{x,z} V + Re(p̄ψ)` pointwise (the
/// potential varies in x, so no transverse integration). The Laplacian uses
/// 5-point differences with one-sided closure at the rectangle boundary.
pub fn potential_gradient_2d(
    psi_traj: &Trajectory,
    p_traj: &Trajectory,
    v: &TabulatedTimeline,
    gamma: f64,
    grid: &Grid1D,
) -> Result<Array2<f64>> {
    if psi_traj.axial != p_traj.axial {
        return Err(Error::InvalidConfig(
            "state and costate trajectories live on different axial grids".into(),
        ));
    }
    let (nx, nz) = (v.values.nrows(), v.values.ncols());
    if nx != grid.n {
        return Err(Error::LengthMismatch {
            expected: grid.n,
            got: nx,
        });
    }
    // Map each tabulated slice to a step of the propagation grid.
    let fine = psi_traj.axial;
    let per_slice = fine.n_steps / v.axial.n_steps;
    if per_slice == 0 || fine.n_steps != per_slice * v.axial.n_steps {
        return Err(Error::InvalidConfig(format!(
            "tabulated grid ({} steps) does not divide the propagation grid ({} steps)",
            v.axial.n_steps, fine.n_steps
        )));
    }

    let dx2 = grid.dx * grid.dx;
    let dz2 = v.axial.dz * v.axial.dz;
    let vv = &v.values;
    // second difference with a one-sided (shifted-stencil) closure
    let lap = |j: usize, k: usize| -> f64 {
        let jj = j.clamp(1, nx - 2);
        let kk = k.clamp(1, nz - 2);
        (vv[(jj - 1, k)] - 2.0 * vv[(jj, k)] + vv[(jj + 1, k)]) / dx2
            + (vv[(j, kk - 1)] - 2.0 * vv[(j, kk)] + vv[(j, kk + 1)]) / dz2
    };

    let mut g = Array2::zeros((nx, nz));
    let mut psi_buf = vec![Complex64::ZERO; nx];
    let mut p_buf = vec![Complex64::ZERO; nx];
    for k in 0..nz {
        let step = k * per_slice;
        psi_traj.snapshot_into(step, &mut psi_buf);
        p_traj.snapshot_into(step, &mut p_buf);
        for j in 0..nx {
            g[(j, k)] = -gamma * lap(j, k) + (p_buf[j].conj() * psi_buf[j]).re;
        }
    }
    Ok(g)
}

/// Sobolev gradient descent over the full tabulated potential. The projected
/// gradient solves the 2D Dirichlet problem on the rectangle, so the
/// boundary slices of the potential never change.
pub fn grape_descend_2d(
    problem: &PotentialProblem,
    v_init: &TabulatedTimeline,
    config: &GrapeConfig,
) -> Result<(TabulatedTimeline, DescentHistory)> {
    config.validate()?;
    let axial = problem.axial;
    let grid = problem.grid;
    let (nx, nz) = (v_init.values.nrows(), v_init.values.ncols());
    if nx != grid.n {
        return Err(Error::LengthMismatch {
            expected: grid.n,
            got: nx,
        });
    }
    let per_slice = axial.n_steps / v_init.axial.n_steps;
    if per_slice == 0 || axial.n_steps != per_slice * v_init.axial.n_steps {
        return Err(Error::InvalidConfig(
            "tabulated grid must divide the propagation grid".into(),
        ));
    }
    let store = if per_slice == 1 {
        Store::Full
    } else {
        Store::Stride(per_slice)
    };
    let solver = Poisson2D::new(nx - 2, nz - 2, grid.dx, v_init.axial.dz)?;
    let cell = grid.dx * v_init.axial.dz;

    let mut v = v_init.clone();
    let mut current = problem.reduced_objective(&v)?;
    let mut history = DescentHistory::new(current);

    for _iter in 0..config.max_iters {
        let timeline = PotentialTimeline::Tabulated(v.clone());
        let psi_traj = propagate_forward(&problem.phi0, &timeline, &axial, &grid, store)?;
        let p_l = costate_terminal(&problem.phi_d, &psi_traj.terminal(), &grid)?;
        let p_traj = propagate_backward(&p_l, &timeline, &axial, &grid, store)?;
        let g = potential_gradient_2d(&psi_traj, &p_traj, &v, problem.gamma, &grid)?;

        // Project: solve -Δ h = g on the interior, h = 0 on the boundary.
        let interior = g.slice(ndarray::s![1..nx - 1, 1..nz - 1]).to_owned();
        let h_int = solver.solve(&interior)?;
        let mut h = Array2::zeros((nx, nz));
        h.slice_mut(ndarray::s![1..nx - 1, 1..nz - 1]).assign(&h_int);

        let grad_norm_sq = h.iter().map(|x| x * x).sum::<f64>() * cell;
        let grad_norm = grad_norm_sq.sqrt();
        history.grad_norm_per_iter.push(grad_norm);
        if grad_norm < config.grad_tol {
            break;
        }

        let mut alpha = config.initial_step / grad_norm;
        let mut accepted = false;
        while alpha >= config.min_step {
            let v_trial = TabulatedTimeline::new(&v.values - &(&h * alpha), v.axial)?;
            let trial = problem.reduced_objective(&v_trial)?;
            if trial.total <= current.total - config.armijo_c * alpha * grad_norm_sq {
                v = v_trial;
                current = trial;
                accepted = true;
                break;
            }
            alpha *= config.backtrack_ratio;
        }
        if !accepted {
            if history.accepted_steps == 0 {
                history.stalled = true;
                return Ok((v_init.clone(), history));
            }
            break;
        }
        history.push(current);
    }
    Ok((v, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::{evaluate_ansatz, AnsatzCoefficients};
    use crate::eigen::{ground_state, invert_potential};
    use crate::grid::AxialGrid;
    use crate::potentials::{poschl_teller, tabulate, tophat_target, SeparableTimeline};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn grid() -> Grid1D {
        Grid1D::new(-5.0 * PI, 5.0 * PI, 1024).unwrap()
    }

    /// The top-hat stage: Pöschl–Teller well to inverse-designed flat mode.
    fn tophat_problem(n_steps: usize) -> ControlProblem {
        let g = grid();
        let axial = AxialGrid::new(0.0, 7.0, n_steps).unwrap();
        let v0 = poschl_teller(1.0, 0.0, &g);
        let target = tophat_target(1e-3, 8, &g).unwrap();
        let raw = invert_potential(&target, 0.0, 1e-6, &g).unwrap();
        let shift = -1.0 - raw.min();
        let vl = PotentialSamples::new(raw.values.mapv(|x| x + shift)).unwrap();
        let phi0 = ground_state(&v0, &g).unwrap().phi;
        let phi_d = ground_state(&vl, &g).unwrap().phi;
        ControlProblem {
            grid: g,
            axial,
            v0,
            vl,
            phi0,
            phi_d,
            gamma: 1e-6,
        }
    }

    #[test]
    fn gradient_vanishes_for_zero_costate_and_linear_control() {
        let p = tophat_problem(400);
        let timeline = p
            .timeline(
                Control::ramp(1.0, 0.0, &p.axial),
                Control::ramp(0.0, 1.0, &p.axial),
            )
            .unwrap();
        let psi = propagate_forward(&p.phi0, &timeline, &p.axial, &p.grid, Store::Full).unwrap();
        let zero = crate::field::Field::new(ndarray::Array1::zeros(p.grid.n));
        // a zero costate trajectory: zero field propagates to zero
        let mut p_traj = psi.clone();
        p_traj.data.fill(num_complex::Complex64::ZERO);
        let _ = zero;
        let u = Control::ramp(1.0, 0.0, &p.axial);
        let g = l2_control_gradient(&psi, &p_traj, &p.v0, &u, p.gamma, &p.grid).unwrap();
        for v in g.iter() {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tikhonov_part_of_the_gradient_is_analytic() {
        let p = tophat_problem(2000);
        let l = 7.0;
        let gamma = 1e-3;
        let timeline = p
            .timeline(
                Control::ramp(1.0, 0.0, &p.axial),
                Control::ramp(0.0, 1.0, &p.axial),
            )
            .unwrap();
        let psi = propagate_forward(&p.phi0, &timeline, &p.axial, &p.grid, Store::Full).unwrap();
        let mut p_traj = psi.clone();
        p_traj.data.fill(num_complex::Complex64::ZERO);
        let u = Control::new(ndarray::Array1::from_iter(
            (0..p.axial.n_samples()).map(|k| (PI * p.axial.z(k) / l).sin()),
        ))
        .unwrap();
        let g = l2_control_gradient(&psi, &p_traj, &p.v0, &u, gamma, &p.grid).unwrap();
        // -γu'' = γ(π/l)² sin(πz/l) up to second-difference error
        for k in (100..1900).step_by(250) {
            let z = p.axial.z(k);
            let exact = gamma * (PI / l).powi(2) * (PI * z / l).sin();
            assert!(
                (g[k] - exact).abs() < 1e-6 * gamma.max(1e-12) / 1e-3,
                "at k={k}: {} vs {exact}",
                g[k]
            );
        }
    }

    #[test]
    fn adjoint_gradient_matches_finite_differences() {
        let p = tophat_problem(2000);
        let axial = p.axial;
        let u = Control::ramp(1.0, 0.0, &axial);
        let v = Control::ramp(0.0, 1.0, &axial);

        let timeline = p.timeline(u.clone(), v.clone()).unwrap();
        let psi_traj = propagate_forward(&p.phi0, &timeline, &axial, &p.grid, Store::Full).unwrap();
        let p_l = costate_terminal(&p.phi_d, &psi_traj.terminal(), &p.grid).unwrap();
        let p_traj = propagate_backward(&p_l, &timeline, &axial, &p.grid, Store::Full).unwrap();
        let gu = l2_control_gradient(&psi_traj, &p_traj, &p.v0, &u, p.gamma, &p.grid).unwrap();
        let gv = l2_control_gradient(&psi_traj, &p_traj, &p.vl, &v, p.gamma, &p.grid).unwrap();

        // 5 random in-span directions for each control
        let eps = 1e-5;
        for seed in 0..5u64 {
            let coeffs = crate::controls::sample_random_coefficients(
                seed,
                15,
                (0.0, 0.0),
                (axial.z0, axial.z1),
            )
            .unwrap();
            let w = evaluate_ansatz(&coeffs, &axial).unwrap();

            // perturb u
            let u_plus = Control::new(&u.samples + &(&w.samples * eps)).unwrap();
            let u_minus = Control::new(&u.samples - &(&w.samples * eps)).unwrap();
            let fd = (p.reduced_objective(&u_plus, &v).unwrap().total
                - p.reduced_objective(&u_minus, &v).unwrap().total)
                / (2.0 * eps);
            let adj: f64 =
                gu.iter().zip(w.samples.iter()).map(|(a, b)| a * b).sum::<f64>() * axial.dz;
            let rel = (fd - adj).abs() / fd.abs().max(adj.abs()).max(1e-14);
            assert!(rel < 1e-3, "u-direction seed {seed}: fd {fd} adj {adj} rel {rel}");

            // perturb v
            let v_plus = Control::new(&v.samples + &(&w.samples * eps)).unwrap();
            let v_minus = Control::new(&v.samples - &(&w.samples * eps)).unwrap();
            let fd = (p.reduced_objective(&u, &v_plus).unwrap().total
                - p.reduced_objective(&u, &v_minus).unwrap().total)
                / (2.0 * eps);
            let adj: f64 =
                gv.iter().zip(w.samples.iter()).map(|(a, b)| a * b).sum::<f64>() * axial.dz;
            let rel = (fd - adj).abs() / fd.abs().max(adj.abs()).max(1e-14);
            assert!(rel < 1e-3, "v-direction seed {seed}: fd {fd} adj {adj} rel {rel}");
        }
    }

    #[test]
    fn projection_solves_the_sine_mode() {
        let axial = AxialGrid::new(0.0, 7.0, 2000).unwrap();
        let cheb = ChebOperator::new((0.0, 7.0), DEFAULT_POISSON_NODES).unwrap();
        let l = 7.0;
        let g = Array1::from_iter((0..axial.n_samples()).map(|k| (PI * axial.z(k) / l).sin()));
        let h = project_h10(&g, &cheb, &axial).unwrap();
        for (k, hv) in h.iter().enumerate() {
            let exact = (l / PI).powi(2) * (PI * axial.z(k) / l).sin();
            assert!((hv - exact).abs() < 1e-6, "at {k}: {hv} vs {exact}");
        }
        assert_eq!(h[0], 0.0);
        assert_eq!(h[axial.n_samples() - 1], 0.0);

        let ones = Array1::from_elem(axial.n_samples(), 1.0);
        let h = project_h10(&ones, &cheb, &axial).unwrap();
        for (k, hv) in h.iter().enumerate() {
            let z = axial.z(k);
            assert!((hv - z * (l - z) / 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn pairing_identity_between_l2_and_h10() {
        // ⟨δ𝒥, w⟩_L² = ⟨∇ℒ, w⟩_Ḣ¹₀ for in-span directions w, evaluated with
        // spectrally accurate Clenshaw–Curtis quadrature on the Chebyshev
        // nodes (first derivatives from the collocation matrix).
        let axial = AxialGrid::new(0.0, 7.0, 2000).unwrap();
        let cheb = ChebOperator::new((0.0, 7.0), DEFAULT_POISSON_NODES).unwrap();
        let l = 7.0;
        // a generic smooth gradient profile
        let g = Array1::from_iter((0..axial.n_samples()).map(|k| {
            let z = axial.z(k);
            (PI * z / l).sin() + 0.4 * (2.0 * PI * z / l).sin() - 0.2 * (5.0 * PI * z / l).sin()
        }));
        let h = project_h10(&g, &cheb, &axial).unwrap();
        let g_nodes = interpolate_uniform_to_cheb(&g, &axial, &cheb).unwrap();
        let h_nodes = interpolate_uniform_to_cheb(&h, &axial, &cheb).unwrap();
        let dh = cheb.apply_d1(&h_nodes).unwrap();
        for j in 1..=4 {
            let w_nodes = cheb.nodes.mapv(|z| (j as f64 * PI * z / l).sin());
            let dw_nodes = cheb
                .nodes
                .mapv(|z| (j as f64 * PI / l) * (j as f64 * PI * z / l).cos());
            let lhs = cheb
                .integrate(&Array1::from_iter(
                    g_nodes.iter().zip(w_nodes.iter()).map(|(a, b)| a * b),
                ))
                .unwrap();
            let rhs = cheb
                .integrate(&Array1::from_iter(
                    dh.iter().zip(dw_nodes.iter()).map(|(a, b)| a * b),
                ))
                .unwrap();
            assert!(
                (lhs - rhs).abs() < 1e-6,
                "mode {j}: L² pairing {lhs} vs H¹ pairing {rhs}"
            );
        }
    }

    #[test]
    fn descent_decreases_monotonically_and_keeps_endpoints() {
        let p = tophat_problem(600);
        let u0 = Control::ramp(1.0, 0.0, &p.axial);
        let v0 = Control::ramp(0.0, 1.0, &p.axial);
        let config = GrapeConfig {
            max_iters: 8,
            ..GrapeConfig::default()
        };
        let (u, v, history) = grape_descend_1d(&p, &u0, &v0, &config).unwrap();
        assert!(history.accepted_steps > 0);
        assert!(!history.stalled);
        for w in history.objective_per_iter.windows(2) {
            assert!(w[1] < w[0], "objective must strictly decrease");
        }
        // endpoint bit-exactness
        assert_eq!(u.samples[0].to_bits(), 1.0_f64.to_bits());
        assert_eq!(u.samples[p.axial.n_steps].to_bits(), 0.0_f64.to_bits());
        assert_eq!(v.samples[0].to_bits(), 0.0_f64.to_bits());
        assert_eq!(v.samples[p.axial.n_steps].to_bits(), 1.0_f64.to_bits());
    }

    #[test]
    fn converged_start_returns_identity() {
        let p = tophat_problem(400);
        let u0 = Control::ramp(1.0, 0.0, &p.axial);
        let v0 = Control::ramp(0.0, 1.0, &p.axial);
        let config = GrapeConfig {
            grad_tol: 1e9, // everything counts as converged
            ..GrapeConfig::default()
        };
        let (u, v, history) = grape_descend_1d(&p, &u0, &v0, &config).unwrap();
        assert_eq!(history.accepted_steps, 0);
        assert!(!history.stalled);
        assert_eq!(u.samples, u0.samples);
        assert_eq!(v.samples, v0.samples);
    }

    fn small_2d_problem() -> (PotentialProblem, TabulatedTimeline) {
        let g = Grid1D::new(-5.0 * PI, 5.0 * PI, 256).unwrap();
        let axial = AxialGrid::new(0.0, 4.0, 400).unwrap();
        let v0 = poschl_teller(1.0, 0.0, &g);
        let vl = poschl_teller(2.0, 0.0, &g);
        let phi0 = ground_state(&v0, &g).unwrap().phi;
        let phi_d = ground_state(&vl, &g).unwrap().phi;
        let sep = PotentialTimeline::Separable(
            SeparableTimeline::with_ramps(v0, vl, &axial).unwrap(),
        );
        let tab_axial = AxialGrid::new(0.0, 4.0, 100).unwrap(); // stride 4
        let tab = tabulate(&sep, &tab_axial).unwrap();
        (
            PotentialProblem {
                grid: g,
                axial,
                phi0,
                phi_d,
                gamma: 1e-8,
            },
            tab,
        )
    }

    #[test]
    fn gradient_2d_is_zero_for_harmonic_potential_and_zero_costate() {
        let (p, tab) = small_2d_problem();
        // V(x,z) = x + 2z is harmonic: the 5-point Laplacian vanishes
        let mut vals = tab.values.clone();
        for k in 0..vals.ncols() {
            for j in 0..vals.nrows() {
                vals[(j, k)] = p.grid.x(j) + 2.0 * tab.axial.z(k);
            }
        }
        let harmonic = TabulatedTimeline::new(vals, tab.axial).unwrap();
        let timeline = PotentialTimeline::Tabulated(harmonic.clone());
        let psi = propagate_forward(&p.phi0, &timeline, &p.axial, &p.grid, Store::Stride(4)).unwrap();
        let mut zero_p = psi.clone();
        zero_p.data.fill(num_complex::Complex64::ZERO);
        let g = potential_gradient_2d(&psi, &zero_p, &harmonic, 1e-2, &p.grid).unwrap();
        let (nx, nz) = (g.nrows(), g.ncols());
        for j in 1..nx - 1 {
            for k in 1..nz - 1 {
                assert!(
                    g[(j, k)].abs() < 1e-8,
                    "interior gradient {} at ({j},{k})",
                    g[(j, k)]
                );
            }
        }
    }

    #[test]
    fn gradient_2d_tikhonov_term_is_analytic() {
        let (p, tab) = small_2d_problem();
        let gamma = 1e-2;
        let lx = p.grid.length();
        let mut vals = tab.values.clone();
        for k in 0..vals.ncols() {
            for j in 0..vals.nrows() {
                vals[(j, k)] = (2.0 * PI * p.grid.x(j) / lx).sin();
            }
        }
        let v = TabulatedTimeline::new(vals, tab.axial).unwrap();
        let timeline = PotentialTimeline::Tabulated(v.clone());
        let psi = propagate_forward(&p.phi0, &timeline, &p.axial, &p.grid, Store::Stride(4)).unwrap();
        let mut zero_p = psi.clone();
        zero_p.data.fill(num_complex::Complex64::ZERO);
        let g = potential_gradient_2d(&psi, &zero_p, &v, gamma, &p.grid).unwrap();
        let scale = gamma * (2.0 * PI / lx).powi(2);
        for j in (10..p.grid.n - 10).step_by(37) {
            for k in (1..v.values.ncols() - 1).step_by(17) {
                let exact = scale * (2.0 * PI * p.grid.x(j) / lx).sin();
                assert!(
                    (g[(j, k)] - exact).abs() < 1e-4 * scale.abs().max(1e-12) / 1e-2,
                    "({j},{k}): {} vs {exact}",
                    g[(j, k)]
                );
            }
        }
    }

    #[test]
    fn gradient_2d_matches_finite_differences() {
        use rand::prelude::*;
        let (p, tab) = small_2d_problem();
        let timeline = PotentialTimeline::Tabulated(tab.clone());
        let psi_traj =
            propagate_forward(&p.phi0, &timeline, &p.axial, &p.grid, Store::Stride(4)).unwrap();
        let p_l = costate_terminal(&p.phi_d, &psi_traj.terminal(), &p.grid).unwrap();
        let p_traj = propagate_backward(&p_l, &timeline, &p.axial, &p.grid, Store::Stride(4)).unwrap();
        let g = potential_gradient_2d(&psi_traj, &p_traj, &tab, p.gamma, &p.grid).unwrap();

        let (nx, nz) = (tab.values.nrows(), tab.values.ncols());
        let lx = p.grid.length();
        let lz = tab.axial.length();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..3 {
            // smooth compactly supported bump, vanishing at the boundary
            let x0 = rng.random_range(-6.0..6.0);
            let z0 = rng.random_range(1.0..3.0);
            let mut w = Array2::zeros((nx, nz));
            for j in 0..nx {
                for k in 0..nz {
                    let x = p.grid.x(j);
                    let z = tab.axial.z(k);
                    let window = ((PI * (x - p.grid.x_min) / lx).sin()
                        * (PI * (z - tab.axial.z0) / lz).sin())
                    .powi(2);
                    w[(j, k)] = window
                        * (-(x - x0).powi(2) / 4.0 - (z - z0).powi(2) / 0.5).exp();
                }
            }
            let eps = 1e-4;
            let v_plus = TabulatedTimeline::new(&tab.values + &(&w * eps), tab.axial).unwrap();
            let v_minus = TabulatedTimeline::new(&tab.values - &(&w * eps), tab.axial).unwrap();
            let fd = (p.reduced_objective(&v_plus).unwrap().total
                - p.reduced_objective(&v_minus).unwrap().total)
                / (2.0 * eps);
            let adj = g
                .iter()
                .zip(w.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                * p.grid.dx
                * tab.axial.dz;
            let rel = (fd - adj).abs() / fd.abs().max(adj.abs()).max(1e-16);
            assert!(rel < 1e-2, "fd {fd} adj {adj} rel {rel}");
        }
    }

    #[test]
    fn descent_2d_preserves_boundary_slices_and_decreases() {
        let (p, tab) = small_2d_problem();
        let config = GrapeConfig {
            max_iters: 4,
            ..GrapeConfig::default()
        };
        let (v, history) = grape_descend_2d(&p, &tab, &config).unwrap();
        for w in history.objective_per_iter.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(
            history.objective_per_iter.last().unwrap() <= &history.objective_per_iter[0]
        );
        let (nx, nz) = (tab.values.nrows(), tab.values.ncols());
        for j in 0..nx {
            assert_eq!(v.values[(j, 0)].to_bits(), tab.values[(j, 0)].to_bits());
            assert_eq!(
                v.values[(j, nz - 1)].to_bits(),
                tab.values[(j, nz - 1)].to_bits()
            );
        }
    }
}
