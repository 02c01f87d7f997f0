//! Projections, rays, states and the lattice and Jordan operations on them.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::eigen::{eigh, HermitianEigen};
use crate::matrix::{inner, norm, ComplexMatrix};
use crate::tol::{EIGEN_CLUSTER_GAP, KEY_DECIMALS, PSD_FLOOR};
use crate::{Error, Result};

/// True iff `m` is self-adjoint and idempotent within `tol`.
pub fn is_projection(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_self_adjoint(tol) && (m * m).dist(m) <= tol
}

/// A self-adjoint idempotent matrix together with its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    matrix: ComplexMatrix,
    rank: usize,
}

impl Projection {
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !is_projection(&matrix, tol) {
            return Err(Error::NotProjection);
        }
        Ok(Self::from_matrix_unchecked(matrix))
    }

    /// Symmetrises `matrix` and reads the rank off the rounded trace.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        let matrix = matrix.hermitian_part();
        let rank = matrix.trace().re.round().max(0.0) as usize;
        Self { matrix, rank }
    }

    /// Projection onto the span of orthonormal `vectors`.
    pub(crate) fn from_orthonormal(dim: usize, vectors: &[Vec<Complex64>]) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        for v in vectors {
            m = &m + &ComplexMatrix::outer(v);
        }
        Self { matrix: m.hermitian_part(), rank: vectors.len() }
    }

    pub fn zero(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::zeros(dim), rank: 0 }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim), rank: dim }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0
    }

    /// `1 - p`
    pub fn complement(&self) -> Self {
        let n = self.dim();
        Self { matrix: &ComplexMatrix::identity(n) - &self.matrix, rank: n - self.rank }
    }

    /// `self <= other` in the projection lattice, i.e. `other * self = self`.
    pub fn le(&self, other: &Self, tol: f64) -> bool {
        (other.matrix() * &self.matrix).dist(&self.matrix) <= tol
    }

    /// `self * other = 0`
    pub fn orthogonal_to(&self, other: &Self, tol: f64) -> bool {
        (&self.matrix * &other.matrix).max_abs() <= tol
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.matrix.dist(&other.matrix)
    }

    /// Canonical registry key: entries rounded to a fixed decimal grid.
    pub fn key(&self) -> ProjectionKey {
        let scale = 10f64.powi(KEY_DECIMALS);
        let q = |x: f64| {
            let r = (x * scale).round() as i64;
            if r == 0 {
                0
            } else {
                r
            }
        };
        ProjectionKey { dim: self.dim(), entries: self.matrix.entries().iter().map(|z| (q(z.re), q(z.im))).collect() }
    }
}

/// Rounded entries of a projection. A projection matrix carries no global
/// phase, so rounding alone is canonical.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProjectionKey {
    dim: usize,
    entries: Vec<(i64, i64)>,
}

/// A unit vector, identified with every phase multiple of itself.
#[derive(Debug, Clone)]
pub struct Ray {
    vector: Vec<Complex64>,
}

impl Ray {
    /// Normalises `vector`. Fails with [`Error::DegenerateRay`] on a (numerically)
    /// zero vector.
    pub fn new(vector: Vec<Complex64>) -> Result<Self> {
        let n = norm(&vector);
        if vector.is_empty() || !n.is_finite() || n <= 1e-12 {
            return Err(Error::DegenerateRay);
        }
        Ok(Self { vector: vector.into_iter().map(|z| z / n).collect() })
    }

    pub fn from_real(v: &[f64]) -> Result<Self> {
        Self::new(v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn vector(&self) -> &[Complex64] {
        &self.vector
    }

    /// `|<u, v>| = 1` within `tol`.
    pub fn equivalent(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && (inner(&self.vector, &other.vector).norm() - 1.0).abs() <= tol
    }

    pub fn overlap(&self, other: &Self) -> f64 {
        inner(&self.vector, &other.vector).norm()
    }
}

/// Rank-one projection `|v><v|`.
pub fn projection_from_ray(r: &Ray) -> Projection {
    Projection { matrix: ComplexMatrix::outer(&r.vector).hermitian_part(), rank: 1 }
}

/// Self-adjoint, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let defect = matrix.self_adjoint_defect();
        if defect > tol {
            return Err(Error::NotSelfAdjoint { defect });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > tol.max(1e-12) * matrix.dim() as f64 {
            return Err(Error::InvalidState(alloc::format!("trace {trace} is not 1")));
        }
        let min = eigh(&matrix, tol)?.min_value();
        if min < -tol.max(-PSD_FLOOR) {
            return Err(Error::InvalidState(alloc::format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix: matrix.hermitian_part() })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    pub fn pure(r: &Ray) -> Self {
        Self { matrix: projection_from_ray(r).into_matrix() }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Born weight `tr(rho p)`.
    pub fn prob(&self, p: &Projection) -> f64 {
        self.matrix.trace_product(p.matrix()).re
    }
}

/// Orthonormal basis of the kernel of a positive semidefinite matrix, taken
/// from eigenvalues at most `tol`.
fn psd_kernel(m: &ComplexMatrix, tol: f64) -> Result<Vec<Vec<Complex64>>> {
    let e = eigh(m, 1e-6)?;
    Ok((0..e.values.len()).filter(|&k| e.values[k].abs() <= tol).map(|k| e.vector(k)).collect())
}

/// `p /\ q`: the projection onto the intersection of the ranges, computed as
/// the kernel of `(1 - p) + (1 - q)`.
pub fn meet(p: &Projection, q: &Projection, tol: f64) -> Result<Projection> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: q.dim() });
    }
    let m = p.complement().matrix() + q.complement().matrix();
    let kernel = psd_kernel(&m, tol.max(1e-12))?;
    Ok(Projection::from_orthonormal(p.dim(), &kernel))
}

/// `p \/ q = 1 - ((1 - p) /\ (1 - q))`
pub fn join(p: &Projection, q: &Projection, tol: f64) -> Result<Projection> {
    Ok(meet(&p.complement(), &q.complement(), tol)?.complement())
}

/// One eigenvalue of a self-adjoint operator with its eigenprojection.
#[derive(Debug, Clone)]
pub struct SpectralAtom {
    pub value: f64,
    pub projection: Projection,
}

/// Spectral decomposition `a = sum_i A_i p_i` with distinct eigenvalues in
/// ascending order. Eigenvalues whose sorted gap is below
/// [`EIGEN_CLUSTER_GAP`] are merged and represented by their mean.
pub fn spectral_atoms(a: &ComplexMatrix, tol: f64) -> Result<Vec<SpectralAtom>> {
    let e = eigh(a, tol)?;
    Ok(cluster(&e))
}

fn cluster(e: &HermitianEigen) -> Vec<SpectralAtom> {
    let n = e.values.len();
    let mut atoms = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && e.values[end] - e.values[end - 1] < EIGEN_CLUSTER_GAP {
            end += 1;
        }
        let vectors: Vec<Vec<Complex64>> = (start..end).map(|k| e.vector(k)).collect();
        let value = e.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        atoms.push(SpectralAtom { value, projection: Projection::from_orthonormal(n, &vectors) });
        start = end;
    }
    atoms
}

/// Spectral calculus: `f(a) = sum_i f(A_i) p_i`.
pub fn apply_function(a: &ComplexMatrix, tol: f64, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let atoms = spectral_atoms(a, tol)?;
    let mut out = ComplexMatrix::zeros(a.dim());
    for atom in &atoms {
        out = &out + &atom.projection.matrix().scale_real(f(atom.value));
    }
    Ok(out)
}

/// `(ab + ba) / 2`
pub fn jordan_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    (&(a * b) + &(b * a)).scale_real(0.5)
}

/// `||ab - ba||_max <= tol`
pub fn commutes(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.commutator(b).max_abs() <= tol
}

/// Self-adjoint commutator `i[a, b]`.
pub fn hermitian_commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.commutator(b).scale(Complex64::new(0.0, 1.0))
}
