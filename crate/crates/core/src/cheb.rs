//! Chebyshev collocation on an interval.
//!
//! Builds Chebyshev–Gauss–Lobatto nodes, barycentric differentiation
//! matrices, Clenshaw–Curtis quadrature weights, and a factorized solver
//! for the Dirichlet Poisson problem `-w'' = f`, `w(a) = w(b) = 0`. This
//! is the projection machinery that turns L² gradients into admissible
//! Sobolev gradients.

use nalgebra::{DMatrix, DVector};
use ndarray::Array1;

use crate::error::{Error, Result};
use crate::grid::AxialGrid;

/// Default node count for the 1D gradient projection; controls are smooth
/// (quadratically decaying sine coefficients), so this overshoots the
/// required accuracy cheaply.
pub const DEFAULT_POISSON_NODES: usize = 64;

/// Chebyshev collocation operator on `[a, b]`.
pub struct ChebOperator {
    pub interval: (f64, f64),
    /// Number of nodes, including both endpoints.
    pub n_nodes: usize,
    /// Gauss–Lobatto nodes mapped to the interval, strictly ascending.
    pub nodes: Array1<f64>,
    /// First-derivative collocation matrix, all rows.
    pub d1: DMatrix<f64>,
    /// Second-derivative collocation matrix with the two Dirichlet boundary
    /// rows removed: shape `(n_nodes - 2) x n_nodes`.
    pub d2: DMatrix<f64>,
    /// Clenshaw–Curtis quadrature weights on the interval.
    pub quad_weights: Array1<f64>,
    /// LU factorization of the negated interior block of `d2`, used by the
    /// Poisson solve.
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl ChebOperator {
    pub fn new(interval: (f64, f64), n_nodes: usize) -> Result<Self> {
        let (a, b) = interval;
        if !(b > a) {
            return Err(Error::InvalidGrid(format!(
                "interval end ({b}) must exceed start ({a})"
            )));
        }
        if n_nodes < 4 {
            return Err(Error::InvalidGrid(
                "Chebyshev operator needs at least 4 nodes".into(),
            ));
        }
        let deg = n_nodes - 1;

        // Ascending Gauss–Lobatto nodes: t_j = -cos(jπ/deg) on [-1, 1].
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = Array1::from_iter((0..n_nodes).map(|j| {
            let t = -(std::f64::consts::PI * j as f64 / deg as f64).cos();
            mid + half * t
        }));

        // Barycentric weights for Gauss–Lobatto points.
        let bary: Vec<f64> = (0..n_nodes)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == deg {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();

        // First-derivative matrix via the barycentric formula with the
        // negative-sum trick on the diagonal.
        let mut d1 = DMatrix::zeros(n_nodes, n_nodes);
        for i in 0..n_nodes {
            let mut row_sum = 0.0;
            for j in 0..n_nodes {
                if i != j {
                    let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                    d1[(i, j)] = v;
                    row_sum += v;
                }
            }
            d1[(i, i)] = -row_sum;
        }

        let d2_full = &d1 * &d1;
        let d2 = d2_full.rows(1, n_nodes - 2).into_owned();

        // Interior square block of -d2; boundary columns drop out under
        // homogeneous Dirichlet conditions.
        let interior = -d2.columns(1, n_nodes - 2).into_owned();
        let lu = interior.lu();

        let quad_weights = clenshaw_curtis_weights(deg, half);

        Ok(Self {
            interval,
            n_nodes,
            nodes,
            d1,
            d2,
            quad_weights,
            lu,
        })
    }

    /// Applies the boundary-row-removed second-derivative matrix to samples
    /// at all nodes, returning values at the interior nodes.
    pub fn apply_d2(&self, samples: &Array1<f64>) -> Result<Array1<f64>> {
        if samples.len() != self.n_nodes {
            return Err(Error::LengthMismatch {
                expected: self.n_nodes,
                got: samples.len(),
            });
        }
        let v = DVector::from_iterator(self.n_nodes, samples.iter().copied());
        let out = &self.d2 * v;
        Ok(Array1::from_iter(out.iter().copied()))
    }

    /// First derivative at all nodes.
    pub fn apply_d1(&self, samples: &Array1<f64>) -> Result<Array1<f64>> {
        if samples.len() != self.n_nodes {
            return Err(Error::LengthMismatch {
                expected: self.n_nodes,
                got: samples.len(),
            });
        }
        let v = DVector::from_iterator(self.n_nodes, samples.iter().copied());
        let out = &self.d1 * v;
        Ok(Array1::from_iter(out.iter().copied()))
    }

    /// Clenshaw–Curtis quadrature of samples at the nodes.
    pub fn integrate(&self, samples: &Array1<f64>) -> Result<f64> {
        if samples.len() != self.n_nodes {
            return Err(Error::LengthMismatch {
                expected: self.n_nodes,
                got: samples.len(),
            });
        }
        Ok(samples
            .iter()
            .zip(self.quad_weights.iter())
            .map(|(s, w)| s * w)
            .sum())
    }
}

fn clenshaw_curtis_weights(deg: usize, half_length: f64) -> Array1<f64> {
    let n = deg;
    let mut w = vec![0.0; n + 1];
    if n % 2 == 0 {
        w[0] = 1.0 / (n * n - 1) as f64;
        w[n] = w[0];
        for (idx, wi) in w.iter_mut().enumerate().take(n).skip(1) {
            let theta = std::f64::consts::PI * idx as f64 / n as f64;
            let mut v = 1.0;
            for k in 1..n / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta).cos() / (4 * k * k - 1) as f64;
            }
            v -= (n as f64 * theta).cos() / (n * n - 1) as f64;
            *wi = 2.0 * v / n as f64;
        }
    } else {
        w[0] = 1.0 / (n * n) as f64;
        w[n] = w[0];
        for (idx, wi) in w.iter_mut().enumerate().take(n).skip(1) {
            let theta = std::f64::consts::PI * idx as f64 / n as f64;
            let mut v = 1.0;
            for k in 1..=(n - 1) / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta).cos() / (4 * k * k - 1) as f64;
            }
            *wi = 2.0 * v / n as f64;
        }
    }
    Array1::from_iter(w.into_iter().map(|x| x * half_length))
}

/// Solves `-w'' = rhs` at the interior collocation nodes with `w = 0` at
/// both interval endpoints. Returns `w` at all nodes, endpoints exactly zero.
pub fn solve_dirichlet_poisson_1d(rhs: &Array1<f64>, op: &ChebOperator) -> Result<Array1<f64>> {
    if rhs.len() != op.n_nodes {
        return Err(Error::LengthMismatch {
            expected: op.n_nodes,
            got: rhs.len(),
        });
    }
    let interior_rhs = DVector::from_iterator(op.n_nodes - 2, rhs.iter().skip(1).take(op.n_nodes - 2).copied());
    let sol = op
        .lu
        .solve(&interior_rhs)
        .ok_or_else(|| Error::Internal("singular Chebyshev collocation matrix".into()))?;
    let mut w = Array1::zeros(op.n_nodes);
    for i in 0..op.n_nodes - 2 {
        w[i + 1] = sol[i];
    }
    Ok(w)
}

/// Interpolates samples on a uniform axial grid to the Chebyshev nodes by
/// local cubic (4-point Lagrange) interpolation; exact for cubics.
pub fn interpolate_uniform_to_cheb(
    samples: &Array1<f64>,
    axial: &AxialGrid,
    op: &ChebOperator,
) -> Result<Array1<f64>> {
    if samples.len() != axial.n_samples() {
        return Err(Error::LengthMismatch {
            expected: axial.n_samples(),
            got: samples.len(),
        });
    }
    let mut out = Array1::zeros(op.n_nodes);
    for (i, &node) in op.nodes.iter().enumerate() {
        out[i] = cubic_interpolate(samples, axial, node)?;
    }
    Ok(out)
}

fn cubic_interpolate(samples: &Array1<f64>, axial: &AxialGrid, z: f64) -> Result<f64> {
    let tol = 1e-12 * axial.length().abs();
    if z < axial.z0 - tol || z > axial.z1 + tol {
        return Err(Error::NodeOutOfRange {
            node: z,
            lo: axial.z0,
            hi: axial.z1,
        });
    }
    let m = axial.n_samples();
    let s = (z - axial.z0) / axial.dz;
    // 4-point stencil centered on the containing cell, clamped at the ends.
    let mut i0 = (s.floor() as isize - 1).clamp(0, m as isize - 4) as usize;
    if m < 4 {
        i0 = 0;
    }
    let k = (m - 1).min(3);
    let mut acc = 0.0;
    for a in 0..=k {
        let xa = axial.z(i0 + a);
        let mut l = 1.0;
        for b in 0..=k {
            if a != b {
                let xb = axial.z(i0 + b);
                l *= (z - xb) / (xa - xb);
            }
        }
        acc += samples[i0 + a] * l;
    }
    Ok(acc)
}

/// Interpolates values at the Chebyshev nodes back to the uniform axial grid
/// by barycentric Lagrange evaluation through all nodes; spectrally accurate.
pub fn interpolate_cheb_to_uniform(
    values: &Array1<f64>,
    op: &ChebOperator,
    axial: &AxialGrid,
) -> Result<Array1<f64>> {
    if values.len() != op.n_nodes {
        return Err(Error::LengthMismatch {
            expected: op.n_nodes,
            got: values.len(),
        });
    }
    let (a, b) = op.interval;
    let tol = 1e-12 * (b - a).abs();
    let deg = op.n_nodes - 1;
    let bary: Vec<f64> = (0..op.n_nodes)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == deg {
                0.5 * sign
            } else {
                sign
            }
        })
        .collect();
    let mut out = Array1::zeros(axial.n_samples());
    for k in 0..axial.n_samples() {
        let z = axial.z(k);
        if z < a - tol || z > b + tol {
            return Err(Error::NodeOutOfRange { node: z, lo: a, hi: b });
        }
        let mut num = 0.0;
        let mut den = 0.0;
        let mut hit = None;
        for (j, &xj) in op.nodes.iter().enumerate() {
            let d = z - xj;
            if d.abs() < 1e-14 * (b - a).abs().max(1.0) {
                hit = Some(j);
                break;
            }
            let c = bary[j] / d;
            num += c * values[j];
            den += c;
        }
        out[k] = match hit {
            Some(j) => values[j],
            None => num / den,
        };
    }
    Ok(out)
}
