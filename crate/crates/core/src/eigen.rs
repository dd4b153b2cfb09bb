//! Ground states of `-½∂²_x + V` and the inverse design of terminal
//! potentials.
//!
//! The forward solve runs in two stages: inverse iteration on the
//! second-order finite-difference discretization with periodic closure
//! (cheap, robust), then inverse iteration on the Fourier-spectral operator
//! with a kinetic-preconditioned conjugate-gradient inner solve, driving the
//! spectral eigen-residual below 1e-9. The inverse direction recovers the
//! potential from a nodeless target via `V = λ + ½ φ''/φ` with constant
//! continuation outside the supported region, optionally refined against the
//! least-squares misfit between the target and the computed ground state.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid1D;
use crate::potentials::PotentialSamples;
use crate::spectral::{second_derivative_real, FourierWorkspace};

/// An eigenvalue with its unit-norm, real-valued eigenfunction.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub phi: Field,
    /// L² norm of `(-½Δ + V - λ)φ` on the spectral discretization.
    pub residual: f64,
}

/// Applies `-½Δ + V` spectrally to real samples.
pub struct SpectralHamiltonian {
    ws: FourierWorkspace,
    v: Array1<f64>,
    buf: Vec<Complex64>,
}

impl SpectralHamiltonian {
    pub fn new(v: &PotentialSamples, grid: &Grid1D) -> Result<Self> {
        if v.len() != grid.n {
            return Err(Error::LengthMismatch {
                expected: grid.n,
                got: v.len(),
            });
        }
        Ok(Self {
            ws: FourierWorkspace::new(grid),
            v: v.values.clone(),
            buf: vec![Complex64::ZERO; grid.n],
        })
    }

    pub fn apply(&mut self, w: &Array1<f64>) -> Array1<f64> {
        for (b, &x) in self.buf.iter_mut().zip(w.iter()) {
            *b = Complex64::new(x, 0.0);
        }
        self.ws.fft(&mut self.buf);
        for (b, &k) in self.buf.iter_mut().zip(self.ws.k.iter()) {
            *b *= 0.5 * k * k;
        }
        self.ws.ifft(&mut self.buf);
        Array1::from_iter(
            self.buf
                .iter()
                .zip(w.iter().zip(self.v.iter()))
                .map(|(b, (&x, &vj))| b.re + vj * x),
        )
    }

    /// Applies `(½k² + c)⁻¹` in Fourier space; the standard kinetic
    /// preconditioner for Schrödinger solves.
    pub fn precondition(&mut self, r: &Array1<f64>, c: f64) -> Array1<f64> {
        for (b, &x) in self.buf.iter_mut().zip(r.iter()) {
            *b = Complex64::new(x, 0.0);
        }
        self.ws.fft(&mut self.buf);
        for (b, &k) in self.buf.iter_mut().zip(self.ws.k.iter()) {
            *b /= 0.5 * k * k + c;
        }
        self.ws.ifft(&mut self.buf);
        Array1::from_iter(self.buf.iter().map(|b| b.re))
    }
}

/// Rayleigh quotient and spectral eigen-residual of an arbitrary real
/// profile: `λ = ⟨φ, Hφ⟩/⟨φ,φ⟩` and `‖(H - λ)φ‖ / ‖φ‖`.
pub fn eigen_residual(phi: &Field, v: &PotentialSamples, grid: &Grid1D) -> Result<(f64, f64)> {
    let mut h = SpectralHamiltonian::new(v, grid)?;
    let w = phi.re();
    let hw = h.apply(&w);
    let norm_sq = w.iter().map(|x| x * x).sum::<f64>() * grid.dx;
    let lambda = w.iter().zip(hw.iter()).map(|(a, b)| a * b).sum::<f64>() * grid.dx / norm_sq;
    let res_sq = w
        .iter()
        .zip(hw.iter())
        .map(|(a, b)| (b - lambda * a).powi(2))
        .sum::<f64>()
        * grid.dx;
    Ok((lambda, (res_sq / norm_sq).sqrt()))
}

const SPECTRAL_RESIDUAL_TARGET: f64 = 1e-9;

/// Computes the lowest eigenpair of `-½∂²_x + V`.
///
/// The sign is fixed so that the sample of largest magnitude is negative.
/// Returns [`Error::NoBoundState`] when the lowest eigenvalue is not below
/// the potential's asymptotic (grid-edge) level.
pub fn ground_state(v: &PotentialSamples, grid: &Grid1D) -> Result<EigenPair> {
    if v.len() != grid.n {
        return Err(Error::LengthMismatch {
            expected: grid.n,
            got: v.len(),
        });
    }
    let n = grid.n;
    let dx = grid.dx;
    let asymptote = 0.5 * (v.values[0] + v.values[n - 1]);

    // Stage 1: inverse iteration on the periodic finite-difference matrix.
    let v_min = v.min();
    let off = -0.5 / (dx * dx);
    let diag_base = 1.0 / (dx * dx);
    let mut phi = Array1::from_elem(n, 1.0 / (n as f64 * dx).sqrt());
    let mut mu = v_min - 1.0;
    let mut lambda_fd = 0.0;
    for iter in 0..80 {
        let shifted_diag = Array1::from_iter(v.values.iter().map(|&vj| diag_base + vj - mu));
        let w = cyclic_thomas(&shifted_diag, off, &phi)?;
        let norm = l2_norm(&w, dx);
        phi = w.mapv(|x| x / norm);
        lambda_fd = fd_rayleigh(&phi, v, grid);
        let res = fd_residual(&phi, v, grid, lambda_fd);
        if res < 1e-11 * lambda_fd.abs().max(1.0) {
            break;
        }
        // After the basin is found, chase the eigenvalue with a guarded shift.
        if iter >= 8 {
            mu = lambda_fd - (2.0 * res).max(1e-8);
        }
    }

    if lambda_fd >= asymptote - 1e-9 * asymptote.abs().max(1.0) {
        return Err(Error::NoBoundState {
            lambda: lambda_fd,
            asymptote,
        });
    }

    // Stage 2: inverse iteration on the spectral operator, solving the
    // shifted system with kinetic-preconditioned CG.
    let mut h = SpectralHamiltonian::new(v, grid)?;
    let spectral_lambda = |h: &mut SpectralHamiltonian, phi: &Array1<f64>| -> (f64, f64) {
        let hphi = h.apply(phi);
        let lam = phi.iter().zip(hphi.iter()).map(|(a, b)| a * b).sum::<f64>() * dx;
        let res = phi
            .iter()
            .zip(hphi.iter())
            .map(|(a, b)| (b - lam * a).powi(2))
            .sum::<f64>()
            * dx;
        (lam, res.sqrt())
    };

    let (mut lambda, mut residual) = spectral_lambda(&mut h, &phi);
    let pc_shift = 1.0 + (v.max() - v_min).abs();
    let mut delta = (4.0 * (lambda - lambda_fd).abs()).max(1e-6 * lambda.abs().max(1.0));
    let mut outer = 0;
    while residual > SPECTRAL_RESIDUAL_TARGET && outer < 16 {
        let mu_s = lambda - delta;
        let rhs = phi.clone();
        let sol = pcg(
            |w| {
                let hw = h.apply(w);
                Array1::from_iter(hw.iter().zip(w.iter()).map(|(a, b)| a - mu_s * b))
            },
            |r| h.precondition(r, pc_shift - mu_s.min(0.0)),
            &rhs,
            1e-12,
            400,
        );
        match sol {
            Some(w) if w.iter().all(|x| x.is_finite()) => {
                let norm = l2_norm(&w, dx);
                phi = w.mapv(|x| x / norm);
                let (lam, res) = spectral_lambda(&mut h, &phi);
                lambda = lam;
                residual = res;
                delta = (2.0 * res).max(1e-10);
            }
            _ => {
                // Indefinite shift; back off and retry.
                delta *= 4.0;
            }
        }
        outer += 1;
    }

    // Sign convention: the largest-magnitude sample is negative.
    let (mut max_abs, mut max_val) = (0.0, 0.0);
    for &x in phi.iter() {
        if x.abs() > max_abs {
            max_abs = x.abs();
            max_val = x;
        }
    }
    if max_val > 0.0 {
        phi.mapv_inplace(|x| -x);
    }

    if lambda >= asymptote - 1e-9 * asymptote.abs().max(1.0) {
        return Err(Error::NoBoundState { lambda, asymptote });
    }

    Ok(EigenPair {
        lambda,
        phi: Field::from_real(&phi),
        residual,
    })
}

/// Recovers the potential whose ground state is the given nodeless target:
/// `V = λ_gauge + ½ Δφ/φ` where `|φ| ≥ floor·max|φ|`, extended by constant
/// continuation outside that region. `Δφ` is computed spectrally.
pub fn invert_potential(
    target: &Field,
    lambda_gauge: f64,
    floor: f64,
    grid: &Grid1D,
) -> Result<PotentialSamples> {
    if !(floor > 0.0) {
        return Err(Error::InvalidConfig("floor must be positive".into()));
    }
    let phi = target.re();
    let max_im = target.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let max_amp = phi.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if max_im > 1e-12 * max_amp.max(1.0) {
        return Err(Error::InvalidConfig(
            "inverse design target must be real-valued".into(),
        ));
    }
    let d2 = second_derivative_real(&phi, grid)?;
    let thresh = floor * max_amp;

    let first = phi.iter().position(|x| x.abs() >= thresh);
    let last = phi.iter().rposition(|x| x.abs() >= thresh);
    let (first, last) = match (first, last) {
        (Some(a), Some(b)) if a < b => (a, b),
        _ => {
            return Err(Error::InvalidConfig(
                "target has no supported region above the floor".into(),
            ))
        }
    };

    // Ground states are nodeless: a sign change inside the supported region
    // makes the inversion meaningless.
    let sign = phi[first].signum();
    for j in first..=last {
        if phi[j].abs() >= thresh && phi[j].signum() != sign {
            return Err(Error::TargetSignChange { index: j });
        }
    }

    let mut v = Array1::zeros(grid.n);
    let mut valid = vec![false; grid.n];
    for j in first..=last {
        if phi[j].abs() >= thresh {
            v[j] = lambda_gauge + 0.5 * d2[j] / phi[j];
            valid[j] = true;
        }
    }
    // Interior dips below the floor (rare, defensive): bridge linearly.
    let mut j = first;
    while j <= last {
        if !valid[j] {
            let lo = j - 1;
            let mut hi = j;
            while !valid[hi] {
                hi += 1;
            }
            for k in j..hi {
                let t = (k - lo) as f64 / (hi - lo) as f64;
                v[k] = v[lo] * (1.0 - t) + v[hi] * t;
            }
            j = hi;
        } else {
            j += 1;
        }
    }
    // Constant continuation beyond the supported region.
    for j in 0..first {
        v[j] = v[first];
    }
    for j in last + 1..grid.n {
        v[j] = v[last];
    }
    PotentialSamples::new(v)
}

/// Gradient-descent refinement of a terminal potential against the
/// least-squares misfit `½‖target - φ(V)‖²`, with the gradient obtained from
/// first-order eigenpair perturbation. Stops when the misfit drops below
/// `tol` or after `max_iters` accepted steps; returns the refined potential
/// and its computed ground state (the proxy for the true desired state).
pub fn refine_terminal_potential(
    v_init: &PotentialSamples,
    target: &Field,
    grid: &Grid1D,
    max_iters: usize,
    tol: f64,
) -> Result<(PotentialSamples, EigenPair, Vec<f64>)> {
    let dx = grid.dx;
    let tau = target.re();
    let mut v = v_init.clone();
    let mut pair = ground_state(&v, grid)?;
    let mut misfit_history = Vec::new();

    let misfit_of = |pair: &EigenPair| -> (f64, Array1<f64>) {
        // Align the eigenfunction sign with the target before comparing.
        let phi = pair.phi.re();
        let overlap: f64 = tau.iter().zip(phi.iter()).map(|(a, b)| a * b).sum::<f64>() * dx;
        let aligned = if overlap < 0.0 { phi.mapv(|x| -x) } else { phi };
        let m = 0.5
            * tau
                .iter()
                .zip(aligned.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
            * dx;
        (m, aligned)
    };

    let (mut misfit, mut phi) = misfit_of(&pair);
    misfit_history.push(misfit);
    if misfit < tol {
        return Ok((v, pair, misfit_history));
    }

    let mut consecutive_increases = 0usize;
    for _ in 0..max_iters {
        // w = (H - λ)⁺ P⊥ (τ - φ); the misfit gradient is g(x) = w(x)·φ(x).
        let mut h = SpectralHamiltonian::new(&v, grid)?;
        let mut r = Array1::from_iter(tau.iter().zip(phi.iter()).map(|(a, b)| a - b));
        project_out(&mut r, &phi, dx);
        let lambda = pair.lambda;
        let pc_shift = 1.0 + (v.max() - v.min()).abs();
        let phi_ref = phi.clone();
        let w = pcg(
            |x| {
                let mut xp = x.clone();
                project_out(&mut xp, &phi_ref, dx);
                let mut hx = h.apply(&xp);
                for (o, &xi) in hx.iter_mut().zip(xp.iter()) {
                    *o -= lambda * xi;
                }
                project_out(&mut hx, &phi_ref, dx);
                hx
            },
            |x| {
                let mut m = h.precondition(x, pc_shift);
                project_out(&mut m, &phi_ref, dx);
                m
            },
            &r,
            1e-10,
            400,
        )
        .ok_or_else(|| Error::Internal("eigen perturbation solve failed".into()))?;

        let g = Array1::from_iter(w.iter().zip(phi.iter()).map(|(a, b)| -a * b));
        let g_norm_sq = g.iter().map(|x| x * x).sum::<f64>() * dx;
        if g_norm_sq < 1e-28 {
            break;
        }

        // Backtracking line search on the misfit.
        let mut alpha = misfit / g_norm_sq;
        let mut accepted = false;
        for _ in 0..40 {
            let v_trial =
                PotentialSamples::new(Array1::from_iter(
                    v.values.iter().zip(g.iter()).map(|(a, b)| a - alpha * b),
                ))?;
            match ground_state(&v_trial, grid) {
                Ok(trial_pair) => {
                    let (m_trial, phi_trial) = misfit_of(&trial_pair);
                    if m_trial <= misfit - 1e-4 * alpha * g_norm_sq {
                        if m_trial > misfit {
                            consecutive_increases += 1;
                        } else {
                            consecutive_increases = 0;
                        }
                        v = v_trial;
                        pair = trial_pair;
                        misfit = m_trial;
                        phi = phi_trial;
                        accepted = true;
                        break;
                    }
                }
                Err(Error::NoBoundState { .. }) => {}
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        misfit_history.push(misfit);
        if consecutive_increases >= 5 {
            return Err(Error::Diverged {
                count: consecutive_increases,
                misfit,
            });
        }
        if misfit < tol {
            break;
        }
    }
    Ok((v, pair, misfit_history))
}

fn project_out(x: &mut Array1<f64>, phi: &Array1<f64>, dx: f64) {
    let c = x.iter().zip(phi.iter()).map(|(a, b)| a * b).sum::<f64>() * dx;
    let phi_sq = phi.iter().map(|b| b * b).sum::<f64>() * dx;
    let c = c / phi_sq;
    for (xi, &pi) in x.iter_mut().zip(phi.iter()) {
        *xi -= c * pi;
    }
}

fn l2_norm(x: &Array1<f64>, dx: f64) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() * dx).sqrt()
}

fn fd_rayleigh(phi: &Array1<f64>, v: &PotentialSamples, grid: &Grid1D) -> f64 {
    let n = grid.n;
    let inv2 = 0.5 / (grid.dx * grid.dx);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let lap = phi[(j + n - 1) % n] - 2.0 * phi[j] + phi[(j + 1) % n];
        let h = -inv2 * lap + v.values[j] * phi[j];
        num += phi[j] * h;
        den += phi[j] * phi[j];
    }
    num / den
}

fn fd_residual(phi: &Array1<f64>, v: &PotentialSamples, grid: &Grid1D, lambda: f64) -> f64 {
    let n = grid.n;
    let inv2 = 0.5 / (grid.dx * grid.dx);
    let mut acc = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let lap = phi[(j + n - 1) % n] - 2.0 * phi[j] + phi[(j + 1) % n];
        let h = -inv2 * lap + v.values[j] * phi[j];
        acc += (h - lambda * phi[j]).powi(2);
        den += phi[j] * phi[j];
    }
    (acc / den).sqrt()
}

/// Solves the periodic tridiagonal system `(diag, off, off-corners) x = rhs`
/// by the Sherman–Morrison splitting over two Thomas solves.
fn cyclic_thomas(diag: &Array1<f64>, off: f64, rhs: &Array1<f64>) -> Result<Array1<f64>> {
    let n = diag.len();
    if n < 3 {
        return Err(Error::Internal("cyclic solve needs at least 3 points".into()));
    }
    let gamma = -diag[0];
    let mut d_mod = diag.clone();
    d_mod[0] -= gamma;
    d_mod[n - 1] -= off * off / gamma;

    let y = thomas(&d_mod, off, rhs)?;
    let mut u = Array1::zeros(n);
    u[0] = gamma;
    u[n - 1] = off;
    let q = thomas(&d_mod, off, &u)?;

    let vy = y[0] + off / gamma * y[n - 1];
    let vq = q[0] + off / gamma * q[n - 1];
    let factor = vy / (1.0 + vq);
    Ok(Array1::from_iter(
        y.iter().zip(q.iter()).map(|(a, b)| a - factor * b),
    ))
}

fn thomas(diag: &Array1<f64>, off: f64, rhs: &Array1<f64>) -> Result<Array1<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::Internal("singular tridiagonal system".into()));
    }
    c[0] = off / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - off * c[i - 1];
        if denom == 0.0 {
            return Err(Error::Internal("singular tridiagonal system".into()));
        }
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    let mut x = Array1::zeros(n);
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// Preconditioned conjugate gradients for SPD operators; returns `None` on
/// breakdown.
fn pcg(
    mut apply_a: impl FnMut(&Array1<f64>) -> Array1<f64>,
    mut apply_m: impl FnMut(&Array1<f64>) -> Array1<f64>,
    b: &Array1<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> Option<Array1<f64>> {
    let mut x = Array1::zeros(b.len());
    let mut r = b.clone();
    let b_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Some(x);
    }
    let mut z = apply_m(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let ap = apply_a(&p);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || pap <= 0.0 {
            return if dot(&x, &x) > 0.0 { Some(x) } else { None };
        }
        let alpha = rz / pap;
        for ((xi, &pi), (ri, &api)) in x
            .iter_mut()
            .zip(p.iter())
            .zip(r.iter_mut().zip(ap.iter()))
        {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= rel_tol * b_norm {
            return Some(x);
        }
        z = apply_m(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, &zi) in p.iter_mut().zip(z.iter()) {
            *pi = zi + beta * *pi;
        }
    }
    Some(x)
}

fn dot(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
