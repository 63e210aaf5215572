//! Gauss-Lobatto collocation nodes on `[0, 1]` and the spectral integration
//! matrices used by the SDC residual and sweep.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::Error;
use crate::Result;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::ShapeMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self · x` for a vector of length `cols`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::ShapeMismatch { expected: self.cols, found: x.len() });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Collocation nodes plus the matrices that integrate the Lagrange
/// interpolant through them.
///
/// `q_matrix[m][j]` is the integral from 0 to `nodes[m]` of the `j`-th
/// Lagrange basis polynomial; `s_matrix[m][j]` is the same integral taken
/// between `nodes[m]` and `nodes[m + 1]`. Both act on samples of `F` and are
/// scaled by the step size at the point of use.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub q_matrix: Matrix,
    pub s_matrix: Matrix,
}

impl QuadratureRule {
    /// Builds the rule for `num_nodes` Gauss-Lobatto points.
    pub fn lobatto(num_nodes: usize) -> Result<Self> {
        let nodes = lobatto_nodes(num_nodes)?;
        let q_matrix = integration_matrix(&nodes)?;
        let s_matrix = node_to_node_matrix(&q_matrix)?;
        Ok(QuadratureRule { nodes, q_matrix, s_matrix })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Spacing `nodes[m + 1] - nodes[m]` as a fraction of the step.
    pub fn spacing(&self, m: usize) -> f64 {
        self.nodes[m + 1] - self.nodes[m]
    }
}

/// Gauss-Lobatto points mapped from `[-1, 1]` to `[0, 1]`, ascending and
/// including both endpoints.
///
/// Interior points are the roots of `P'_N` for `N = num_nodes - 1`, found by
/// Newton iteration started from the Chebyshev-Lobatto points. The result is
/// symmetrized about 1/2.
pub fn lobatto_nodes(num_nodes: usize) -> Result<Vec<f64>> {
    if num_nodes < 2 {
        return Err(Error::invalid(alloc::format!(
            "Gauss-Lobatto rule needs at least 2 nodes, got {num_nodes}"
        )));
    }
    let n = num_nodes - 1;
    let mut x = vec![0.0; num_nodes];
    x[0] = -1.0;
    x[n] = 1.0;
    let nf = n as f64;
    for (j, xj) in x.iter_mut().enumerate().take(n).skip(1) {
        let mut t = -libm::cos(core::f64::consts::PI * j as f64 / nf);
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre_and_derivative(n, t);
            // Newton on (1 - t²) P'_N(t), whose derivative is -N(N+1) P_N(t).
            let update = (1.0 - t * t) * dp / (nf * (nf + 1.0) * p);
            t += update;
            if update.abs() < NEWTON_TOL {
                break;
            }
        }
        *xj = t;
    }

    let mut nodes: Vec<f64> = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
    nodes[0] = 0.0;
    nodes[n] = 1.0;
    for i in 1..num_nodes / 2 {
        let a = 0.5 * (nodes[i] + (1.0 - nodes[n - i]));
        nodes[i] = a;
        nodes[n - i] = 1.0 - a;
    }
    if num_nodes % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    Ok(nodes)
}

/// `(P_n(x), P'_n(x))` by the three-term recurrence. Valid for `|x| < 1`.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Monomial coefficients (lowest degree first) of the `j`-th Lagrange basis
/// polynomial on `nodes`.
fn lagrange_coefficients(nodes: &[f64], j: usize) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for (i, &ti) in nodes.iter().enumerate() {
        if i == j {
            continue;
        }
        let denom = nodes[j] - ti;
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k + 1] += c / denom;
            next[k] -= c * ti / denom;
        }
        coeffs = next;
    }
    coeffs
}

/// `Q[m][j] = ∫₀^{nodes[m]} L_j(τ) dτ`, integrated exactly through the
/// monomial expansion of each basis polynomial.
///
/// Accurate to a few ulps for the small node counts SDC uses (up to about
/// six nodes); the monomial route loses digits beyond that.
pub fn integration_matrix(nodes: &[f64]) -> Result<Matrix> {
    if nodes.is_empty() {
        return Err(Error::invalid("integration matrix needs at least one node"));
    }
    for (i, a) in nodes.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::invalid("non-finite quadrature node"));
        }
        if nodes[i + 1..].iter().any(|b| b == a) {
            return Err(Error::invalid(alloc::format!("duplicate quadrature node {a}")));
        }
    }
    let n = nodes.len();
    let mut q = Matrix::zeros(n, n);
    for j in 0..n {
        let coeffs = lagrange_coefficients(nodes, j);
        for (m, &tm) in nodes.iter().enumerate() {
            // Horner on the antiderivative Σ c_k t^{k+1} / (k+1).
            let mut acc = 0.0;
            for (k, &c) in coeffs.iter().enumerate().rev() {
                acc = acc * tm + c / (k as f64 + 1.0);
            }
            q[(m, j)] = acc * tm;
        }
    }
    Ok(q)
}

/// Row differences of `q`: row `m` integrates the interpolant over
/// `[nodes[m], nodes[m + 1]]`.
pub fn node_to_node_matrix(q: &Matrix) -> Result<Matrix> {
    if q.rows() != q.cols() {
        return Err(Error::ShapeMismatch { expected: q.rows(), found: q.cols() });
    }
    if q.rows() < 2 {
        return Err(Error::invalid("node-to-node matrix needs at least 2 nodes"));
    }
    let n = q.rows();
    let mut s = Matrix::zeros(n - 1, n);
    for m in 0..n - 1 {
        for j in 0..n {
            s[(m, j)] = q[(m + 1, j)] - q[(m, j)];
        }
    }
    Ok(s)
}
