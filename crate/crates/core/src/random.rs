//! Random operators for property checks and sampling commands.
//!
//! Nothing here aims at an exact Haar or Hilbert-Schmidt distribution; the
//! generators only need to be reproducible from a seeded [`Rng`] and generic
//! enough to avoid measure-zero coincidences.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::matrix::{inner, norm, ComplexMatrix};

/// Standard normal sample (Box-Muller).
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng)) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let data = (0..dim * dim).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix::from_vec(data).expect("square by construction")
}

/// Random self-adjoint matrix with Gaussian entries.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ginibre(rng, dim).hermitian_part()
}

/// Self-adjoint, trace one, generally indefinite.
pub fn hermitian_trace_one<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let h = hermitian(rng, dim);
    let shift = (1.0 - h.trace().re) / dim as f64;
    &h + &ComplexMatrix::identity(dim).scale_real(shift)
}

/// Full-rank density matrix `G G^* / tr(G G^*)`.
pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim);
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    m.scale_real(1.0 / t).hermitian_part()
}

/// Unit vector with Gaussian components.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        let n = norm(&v);
        if n > 1e-6 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Orthonormal basis from Gram-Schmidt on Gaussian vectors.
pub fn orthonormal_basis<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let n = norm(&v);
        if n > 1e-6 {
            basis.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    basis
}

pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_columns(&orthonormal_basis(rng, dim)).expect("square by construction")
}
