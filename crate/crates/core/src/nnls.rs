//! Nonnegative least squares (Lawson-Hanson active set).
//!
//! Solves `min |A x - b|` over `x >= 0`. At the optimum the residual
//! `r = b - A x` satisfies `A^T r <= 0` and `r . b = |r|^2`, so a nonzero
//! residual is itself a Farkas certificate that `b` lies outside the cone
//! spanned by the columns of `A`.

use alloc::vec;
use alloc::vec::Vec;

use crate::real::{LeastSquares, RealMatrix};
use crate::Result;

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: Vec<f64>,
    /// `b - A x`
    pub residual: Vec<f64>,
    pub iterations: usize,
}

impl NnlsSolution {
    pub fn residual_norm(&self) -> f64 {
        self.residual.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

fn residual(rows: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    rows.iter()
        .zip(b)
        .map(|(row, bi)| bi - row.iter().zip(x).filter(|(_, xj)| **xj != 0.0).map(|(a, xj)| a * xj).sum::<f64>())
        .collect()
}

/// `A^T r`
fn gradient(rows: &[Vec<f64>], r: &[f64], n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for (row, ri) in rows.iter().zip(r) {
        if *ri != 0.0 {
            for (wj, a) in w.iter_mut().zip(row) {
                *wj += ri * a;
            }
        }
    }
    w
}

/// Least-squares solution restricted to the columns in `set`.
fn restricted_solve(rows: &[Vec<f64>], b: &[f64], set: &[usize]) -> Result<Vec<f64>> {
    let sub: Vec<Vec<f64>> = rows.iter().map(|row| set.iter().map(|&j| row[j]).collect()).collect();
    let ls = LeastSquares::new(RealMatrix::from_rows(sub)?)?;
    let top = ls.singular_values().iter().copied().fold(0.0, f64::max);
    Ok(ls.solve(b, top * 1e-12)?.x)
}

/// `rows` is `A` by rows; every row has the same length.
pub fn nnls(rows: &[Vec<f64>], b: &[f64]) -> Result<NnlsSolution> {
    let n = rows.first().map_or(0, Vec::len);
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = 1e-12 * scale * (rows.len().max(1) as f64);
    let mut x = vec![0.0; n];
    let mut passive: Vec<usize> = Vec::new();
    let mut in_passive = vec![false; n];
    let mut iterations = 0;
    let max_iterations = 3 * n + 10;
    loop {
        let r = residual(rows, b, &x);
        let w = gradient(rows, &r, n);
        let enter = (0..n).filter(|&j| !in_passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(enter) = enter else {
            return Ok(NnlsSolution { x, residual: r, iterations });
        };
        iterations += 1;
        if iterations > max_iterations {
            return Ok(NnlsSolution { x, residual: r, iterations });
        }
        passive.push(enter);
        in_passive[enter] = true;
        loop {
            let z = restricted_solve(rows, b, &passive)?;
            if z.iter().all(|&v| v > 0.0) {
                for (&j, &v) in passive.iter().zip(&z) {
                    x[j] = v;
                }
                break;
            }
            // step towards z until the first passive variable hits zero
            let mut alpha = 1.0f64;
            for (&j, &v) in passive.iter().zip(&z) {
                if v <= 0.0 {
                    let denom = x[j] - v;
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    }
                }
            }
            for (&j, &v) in passive.iter().zip(&z) {
                x[j] += alpha * (v - x[j]);
            }
            passive.retain(|&j| {
                let keep = x[j] > tol;
                if !keep {
                    x[j] = 0.0;
                    in_passive[j] = false;
                }
                keep
            });
            if passive.is_empty() {
                break;
            }
        }
    }
}
