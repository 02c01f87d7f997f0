//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Target sizes are tiny (n <= 16 for single systems, n <= 36 for the tensor
//! spaces handled by the Bell module), where Jacobi is accurate to a few ulps
//! on eigenvalues and needs no tridiagonalisation.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::matrix::ComplexMatrix;
use crate::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Diagonalises the Hermitian part of `m`. Fails if `m` is not self-adjoint
/// within `tol`.
pub fn eigh(m: &ComplexMatrix, tol: f64) -> Result<HermitianEigen> {
    let defect = m.self_adjoint_defect();
    if defect > tol {
        return Err(Error::NotSelfAdjoint { defect });
    }
    jacobi(m.hermitian_part())
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &ComplexMatrix, tol: f64) -> Result<Vec<f64>> {
    eigh(m, tol).map(|e| e.values)
}

fn off_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(mut a: ComplexMatrix) -> Result<HermitianEigen> {
    let n = a.dim();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) <= 1e-15 * scale * n as f64 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_norm(&a) > 1e-12 * scale * n as f64 {
        return Err(Error::Numerical("Jacobi eigensolver did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (k, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, k)] = v[(r, i)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// One rotation zeroing `a[p][q]`: `a <- g^* a g`, `v <- v g` with
/// `g = diag(1, e^{-i phi}) * [[c, s], [-s, c]]` on the `(p, q)` plane.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g < 1e-300 {
        return;
    }
    let n = a.dim();
    let phase = apq / g; // e^{i phi}
    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * g);
    let t = if tau == 0.0 { 1.0 } else { tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let ph_conj = phase.conj();

    // g entries
    let gpp = Complex64::new(c, 0.0);
    let gpq = Complex64::new(s, 0.0);
    let gqp = ph_conj * (-s);
    let gqq = ph_conj * c;

    // a <- a g (columns)
    for r in 0..n {
        let (x, y) = (a[(r, p)], a[(r, q)]);
        a[(r, p)] = x * gpp + y * gqp;
        a[(r, q)] = x * gpq + y * gqq;
    }
    // a <- g^* a (rows)
    for col in 0..n {
        let (x, y) = (a[(p, col)], a[(q, col)]);
        a[(p, col)] = gpp.conj() * x + gqp.conj() * y;
        a[(q, col)] = gpq.conj() * x + gqq.conj() * y;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for r in 0..n {
        let (x, y) = (v[(r, p)], v[(r, q)]);
        v[(r, p)] = x * gpp + y * gqp;
        v[(r, q)] = x * gpq + y * gqq;
    }
}
