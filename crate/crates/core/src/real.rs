//! Dense real least squares with rank detection.
//!
//! Linear reconstruction problems (a state from its Born weights, a bipartite
//! operator from its correlation tables) are tall real systems with a few
//! dozen to a few hundred unknowns. They are reduced by Householder QR and the
//! triangular factor is decomposed by one-sided Jacobi SVD, which gives
//! accurate small singular values for the rank decision.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::ComplexMatrix;
use crate::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Row-major `rows x cols` real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Numerical("ragged rows".into()));
        }
        let n = rows.len();
        Ok(Self { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Real coordinates of a self-adjoint `n x n` matrix: the `n` diagonal
/// entries, then real and imaginary parts of the strict upper triangle.
/// `tr(X P) = <hermitian_coordinates(X), trace_functional(P)>`.
pub fn hermitian_coordinates(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    out
}

/// Coefficients `c` with `tr(X P) = c . hermitian_coordinates(X)` for every
/// self-adjoint `X`.
pub fn trace_functional(p: &ComplexMatrix) -> Vec<f64> {
    let n = p.dim();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(p[(i, i)].re);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // X_ij P_ji + X_ji P_ij = 2 Re(X_ij conj(P_ij))
            out.push(2.0 * p[(i, j)].re);
            out.push(2.0 * p[(i, j)].im);
        }
    }
    out
}

/// Inverse of [`hermitian_coordinates`].
pub fn from_hermitian_coordinates(n: usize, x: &[f64]) -> ComplexMatrix {
    assert_eq!(x.len(), n * n, "coordinate length");
    let mut m = ComplexMatrix::zeros(n);
    for i in 0..n {
        m[(i, i)] = crate::c64(x[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            m[(i, j)] = crate::c64(x[k], x[k + 1]);
            m[(j, i)] = crate::c64(x[k], -x[k + 1]);
            k += 2;
        }
    }
    m
}

/// Factorisation of a constraint matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: RealMatrix,
    /// Householder vectors, one per column.
    reflectors: Vec<Vec<f64>>,
    /// `R V = U S`: columns of `u` (n x n, column-major per entry vec)
    u: Vec<Vec<f64>>,
    singular: Vec<f64>,
    v: Vec<Vec<f64>>,
}

/// Minimum-norm least-squares solution with diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    /// `max_i |(A x - b)_i|`
    pub residual: f64,
}

impl LeastSquares {
    pub fn new(a: RealMatrix) -> Result<Self> {
        let n = a.cols;
        let m = a.rows.max(n);
        // column-major working copy, padded with zero rows when m < n
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut c: Vec<f64> = (0..a.rows).map(|i| a.get(i, j)).collect();
                c.resize(m, 0.0);
                c
            })
            .collect();

        let mut reflectors = Vec::with_capacity(n);
        for k in 0..n {
            let norm_x = cols[k][k..].iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut v = vec![0.0; m];
            if norm_x > 0.0 {
                let alpha = if cols[k][k] >= 0.0 { -norm_x } else { norm_x };
                v[k..].copy_from_slice(&cols[k][k..]);
                v[k] -= alpha;
                let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if vn > 0.0 {
                    v.iter_mut().for_each(|x| *x /= vn);
                    for col in cols.iter_mut().skip(k) {
                        apply_reflector(&v, col, k);
                    }
                }
            }
            reflectors.push(v);
        }
        // upper-triangular R, column-major
        let r: Vec<Vec<f64>> =
            (0..n).map(|j| (0..n).map(|i| if i <= j { cols[j][i] } else { 0.0 }).collect()).collect();
        let (u, singular, v) = jacobi_svd(r)?;
        Ok(Self { a, reflectors, u, singular, v })
    }

    pub fn unknowns(&self) -> usize {
        self.a.cols
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular
    }

    /// Number of singular values above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.singular.iter().filter(|&&s| s > threshold).count()
    }

    /// Minimum-norm minimiser of `|A x - b|`, truncating singular values at
    /// `threshold`.
    pub fn solve(&self, b: &[f64], threshold: f64) -> Result<Solution> {
        if b.len() != self.a.rows {
            return Err(Error::DimensionMismatch { expected: self.a.rows, found: b.len() });
        }
        let n = self.a.cols;
        let m = self.a.rows.max(n);
        let mut qtb = b.to_vec();
        qtb.resize(m, 0.0);
        for (k, v) in self.reflectors.iter().enumerate() {
            apply_reflector(v, &mut qtb, k);
        }
        let c = &qtb[..n];
        let mut x = vec![0.0; n];
        for k in 0..n {
            let s = self.singular[k];
            if s <= threshold {
                continue;
            }
            let coef = self.u[k].iter().zip(c).map(|(a, b)| a * b).sum::<f64>() / s;
            for (xi, vi) in x.iter_mut().zip(&self.v[k]) {
                *xi += coef * vi;
            }
        }
        let ax = self.a.mul_vec(&x);
        let residual = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        Ok(Solution { x, residual })
    }
}

fn apply_reflector(v: &[f64], x: &mut [f64], from: usize) {
    let dot: f64 = v[from..].iter().zip(&x[from..]).map(|(a, b)| a * b).sum();
    if dot != 0.0 {
        for (xi, vi) in x[from..].iter_mut().zip(&v[from..]) {
            *xi -= 2.0 * dot * vi;
        }
    }
}

/// One-sided Jacobi SVD of a square matrix given by its columns. Returns
/// `(u_k, s_k, v_k)` for `k` in column order, with `s` unsorted.
#[allow(clippy::type_complexity)]
fn jacobi_svd(mut cols: Vec<Vec<f64>>) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>)> {
    let n = cols.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    // columns this small are rounding noise of a rank-deficient input
    let negligible = 1e-30 * cols.iter().flatten().map(|x| x * x).sum::<f64>();
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(a, b)| a * b).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi SVD did not converge".into()));
    }
    let mut u = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for col in cols {
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        s.push(norm);
        if norm > 0.0 {
            u.push(col.into_iter().map(|x| x / norm).collect());
        } else {
            u.push(vec![0.0; n]);
        }
    }
    Ok((u, s, v))
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}
