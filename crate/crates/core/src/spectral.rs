//! Fourier spectral operations on the periodic transverse grid.
//!
//! Wavenumbers follow the usual FFT layout `k_j = 2π j / L` for
//! `j = 0..n/2` and negative frequencies above, so differentiating a
//! periodic field is a forward transform, a diagonal multiply, and an
//! inverse transform. Inner products and norms are dx-weighted Riemann
//! sums, exact to spectral accuracy for periodic decaying integrands.

use std::sync::Arc;

use ndarray::Array1;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid1D;

/// Cached FFT plans and wavenumbers for one transverse grid.
///
/// A workspace is cheap to build and is deliberately not shared between
/// concurrent propagations; each propagation owns its own scratch.
pub struct FourierWorkspace {
    pub grid: Grid1D,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    /// Wavenumbers in FFT order.
    pub k: Array1<f64>,
}

impl FourierWorkspace {
    pub fn new(grid: &Grid1D) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n);
        let inverse = planner.plan_fft_inverse(grid.n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let k = wavenumbers(grid);
        Self {
            grid: *grid,
            forward,
            inverse,
            scratch: vec![Complex64::ZERO; scratch_len],
            k,
        }
    }

    /// In-place unnormalized forward transform.
    pub fn fft(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// In-place inverse transform, normalized so `ifft(fft(f)) = f`.
    pub fn ifft(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let scale = 1.0 / self.grid.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// In-place spectral second derivative under periodic boundary conditions.
    pub fn second_derivative_inplace(&mut self, buf: &mut [Complex64]) {
        self.fft(buf);
        for (v, &kj) in buf.iter_mut().zip(self.k.iter()) {
            *v *= -kj * kj;
        }
        self.ifft(buf);
    }
}

/// FFT-order wavenumbers `2π j / L` with negative frequencies in the upper half.
pub fn wavenumbers(grid: &Grid1D) -> Array1<f64> {
    let n = grid.n;
    let base = 2.0 * std::f64::consts::PI / grid.length();
    Array1::from_iter((0..n).map(|j| {
        let m = if j <= n / 2 { j as isize } else { j as isize - n as isize };
        base * m as f64
    }))
}

fn check_len(len: usize, grid: &Grid1D) -> Result<()> {
    if len != grid.n {
        return Err(Error::LengthMismatch {
            expected: grid.n,
            got: len,
        });
    }
    Ok(())
}

/// Fourier-spectral second derivative of periodic field samples.
pub fn second_derivative_fourier(f: &Field, grid: &Grid1D) -> Result<Field> {
    check_len(f.len(), grid)?;
    let mut ws = FourierWorkspace::new(grid);
    let mut buf: Vec<Complex64> = f.values.to_vec();
    ws.second_derivative_inplace(&mut buf);
    Ok(Field::new(Array1::from_vec(buf)))
}

/// Spectral second derivative of real samples, returning real samples.
pub fn second_derivative_real(v: &Array1<f64>, grid: &Grid1D) -> Result<Array1<f64>> {
    let f = second_derivative_fourier(&Field::from_real(v), grid)?;
    Ok(f.re())
}

/// L² inner product `Σ conj(f_j) g_j dx`, conjugate-linear in the first slot.
pub fn inner_product(f: &Field, g: &Field, grid: &Grid1D) -> Result<Complex64> {
    check_len(f.len(), grid)?;
    check_len(g.len(), grid)?;
    let mut acc = Complex64::ZERO;
    for (a, b) in f.values.iter().zip(g.values.iter()) {
        acc += a.conj() * b;
    }
    Ok(acc * grid.dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid() -> Grid1D {
        Grid1D::new(-5.0 * PI, 5.0 * PI, 1024).unwrap()
    }

    #[test]
    fn sine_is_an_eigenfunction_of_the_second_derivative() {
        let g = grid();
        let k = 4.0 * 2.0 * PI / g.length();
        let f = Field::sample_real(&g, |x| (k * x).sin());
        let d2 = second_derivative_fourier(&f, &g).unwrap();
        let expect = Field::sample_real(&g, |x| -k * k * (k * x).sin());
        let err = d2
            .values
            .iter()
            .zip(expect.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn constant_has_zero_second_derivative() {
        let g = grid();
        let f = Field::sample_real(&g, |_| 3.25);
        let d2 = second_derivative_fourier(&f, &g).unwrap();
        let err = d2.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn sech_matches_fourth_order_finite_differences() {
        let g = grid();
        let f = Field::sample_real(&g, |x| x.cosh().recip());
        let d2 = second_derivative_fourier(&f, &g).unwrap();
        // 4th-order centered 5-point oracle with periodic wrap.
        let n = g.n;
        let v = f.re();
        let mut max_err: f64 = 0.0;
        for j in 0..n {
            let vm2 = v[(j + n - 2) % n];
            let vm1 = v[(j + n - 1) % n];
            let vp1 = v[(j + 1) % n];
            let vp2 = v[(j + 2) % n];
            let fd = (-vm2 + 16.0 * vm1 - 30.0 * v[j] + 16.0 * vp1 - vp2) / (12.0 * g.dx * g.dx);
            max_err = max_err.max((d2.values[j].re - fd).abs());
        }
        assert!(max_err < 1e-6, "max error {max_err}");
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let g = grid();
        let short = Field::new(Array1::zeros(100));
        assert!(second_derivative_fourier(&short, &g).is_err());
        let f = Field::sample_real(&g, |_| 1.0);
        assert!(inner_product(&short, &f, &g).is_err());
    }

    #[test]
    fn normalized_sech_has_unit_norm() {
        let g = grid();
        let f = Field::sample_real(&g, |x| x.cosh().recip() / 2.0_f64.sqrt());
        let ip = inner_product(&f, &f, &g).unwrap();
        assert_abs_diff_eq!(ip.re, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn distinct_fourier_modes_are_orthogonal() {
        let g = grid();
        let l = g.length();
        let f = Field::sample_real(&g, |x| (2.0 * PI * x / l).sin());
        let h = Field::sample_real(&g, |x| (4.0 * PI * x / l).sin());
        let ip = inner_product(&f, &h, &g).unwrap();
        assert!(ip.norm() < 1e-10);
    }

    #[test]
    fn sech_pair_matches_quadrature_oracle() {
        // ∫ sech⁴(x) dx = 4/3, resolved here by adaptive Simpson refinement.
        let g = grid();
        let f = Field::sample_real(&g, |x| x.cosh().recip());
        let h = Field::sample_real(&g, |x| x.cosh().recip().powi(3));
        let ip = inner_product(&f, &h, &g).unwrap();
        let oracle = simpson_adaptive(|x| x.cosh().recip().powi(4), -5.0 * PI, 5.0 * PI, 1e-10);
        assert_abs_diff_eq!(oracle, 4.0 / 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(ip.re, oracle, epsilon = 1e-6);
    }

    fn simpson_adaptive(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, tol / 2.0, depth - 1) + rec(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        rec(f, a, b, simpson(f, a, b), tol, 40)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        // Parseval: the physical-space norm matches the Fourier-space norm.
        #[test]
        fn parseval_holds_for_random_fields(seed in any::<u64>()) {
            use rand::prelude::*;
            let g = Grid1D::new(-4.0, 4.0, 64).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f = Field::new(Array1::from_iter(
                (0..g.n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
            ));
            let phys = f.norm_sq(&g);
            let mut ws = FourierWorkspace::new(&g);
            let mut buf = f.values.to_vec();
            ws.fft(&mut buf);
            let spec = buf.iter().map(|v| v.norm_sqr()).sum::<f64>() / g.n as f64 * g.dx;
            prop_assert!((phys - spec).abs() < 1e-10 * phys.max(1.0));
        }

        // Linearity of the spectral derivative.
        #[test]
        fn second_derivative_is_linear(seed in any::<u64>()) {
            use rand::prelude::*;
            let g = Grid1D::new(-4.0, 4.0, 64).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rnd_field = || Field::new(Array1::from_iter(
                (0..g.n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
            ));
            let f = rnd_field();
            let h = rnd_field();
            let a = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let b = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let combo = Field::new(&f.values * a + &h.values * b);
            let lhs = second_derivative_fourier(&combo, &g).unwrap();
            let rhs_f = second_derivative_fourier(&f, &g).unwrap();
            let rhs_h = second_derivative_fourier(&h, &g).unwrap();
            let rhs = &rhs_f.values * a + &rhs_h.values * b;
            let err = lhs.values.iter().zip(rhs.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-12 * 400.0); // scale: |k|² up to ~600 on this grid
        }
    }
}
