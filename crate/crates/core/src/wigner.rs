//! Unitary and antiunitary symmetries acting on contexts.
//!
//! An antiunitary is stored as a unitary `u` composed with complex
//! conjugation, acting on operators as `x -> u conj(x) u^*`. Both kinds act
//! on a context poset as an order isomorphism onto the conjugated poset and
//! preserve the Jordan product; they differ in the sign they put on the
//! commutator.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::contexts::{generate_poset, Context, ContextPoset, NodeId};
use crate::matrix::ComplexMatrix;
use crate::opalg::{hermitian_commutator, is_projection, jordan_product, Projection};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryKind {
    Unitary,
    Antiunitary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryOp {
    kind: SymmetryKind,
    u: ComplexMatrix,
}

impl SymmetryOp {
    pub fn new(kind: SymmetryKind, u: ComplexMatrix, tol: f64) -> Result<Self> {
        let defect = u.unitary_defect();
        if defect > tol {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self { kind, u })
    }

    pub fn identity(dim: usize) -> Self {
        Self { kind: SymmetryKind::Unitary, u: ComplexMatrix::identity(dim) }
    }

    /// Plain complex conjugation in the standard basis.
    pub fn conjugation(dim: usize) -> Self {
        Self { kind: SymmetryKind::Antiunitary, u: ComplexMatrix::identity(dim) }
    }

    pub fn kind(&self) -> SymmetryKind {
        self.kind
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    /// Action on operators.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let inner = match self.kind {
            SymmetryKind::Unitary => x.clone(),
            SymmetryKind::Antiunitary => x.conj(),
        };
        &(&self.u * &inner) * &self.u.adjoint()
    }

    /// `self` after `other`.
    pub fn after(&self, other: &Self) -> Self {
        let u = match self.kind {
            SymmetryKind::Unitary => &self.u * &other.u,
            SymmetryKind::Antiunitary => &self.u * &other.u.conj(),
        };
        let kind = if self.kind == other.kind { SymmetryKind::Unitary } else { SymmetryKind::Antiunitary };
        Self { kind, u }
    }
}

/// Node bijection between two posets, `node_map[i]` being the image of `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosetMap {
    pub node_map: Vec<NodeId>,
}

impl PosetMap {
    pub fn identity(n: usize) -> Self {
        Self { node_map: (0..n).map(NodeId).collect() }
    }

    pub fn image(&self, i: NodeId) -> NodeId {
        self.node_map[i.0]
    }

    /// `other` after `self`.
    pub fn then(&self, other: &Self) -> Self {
        Self { node_map: self.node_map.iter().map(|&i| other.node_map[i.0]).collect() }
    }
}

/// Applies `s` to every catalog context, regenerates the poset from the
/// images and matches nodes by their atom sets.
pub fn conjugate_poset(poset: &ContextPoset, s: &SymmetryOp) -> Result<(ContextPoset, PosetMap)> {
    if s.dim() != poset.dim() {
        return Err(Error::DimensionMismatch { expected: poset.dim(), found: s.dim() });
    }
    let tol = poset.tol();
    let check_tol = tol.max(1e-12) * 10.0;
    let mut images = BTreeMap::new();
    for (id, p) in poset.registry().iter() {
        let q = s.apply(p.matrix());
        if !is_projection(&q, check_tol) {
            return Err(Error::Numerical("conjugated atom is not a projection".into()));
        }
        images.insert(id, Projection::new(q.hermitian_part(), check_tol)?);
    }
    let catalog = poset
        .catalog_nodes()
        .iter()
        .map(|&n| Context::new(poset.node_unchecked(n).atoms().iter().map(|a| images[a].clone()).collect(), check_tol))
        .collect::<Result<Vec<_>>>()?;
    let image = generate_poset(poset.dim(), &catalog, tol)?;
    let mut node_map = Vec::with_capacity(poset.len());
    for id in poset.node_ids() {
        let ctx =
            Context::new(poset.node_unchecked(id).atoms().iter().map(|a| images[a].clone()).collect(), check_tol)?;
        let target = image
            .find_context(&ctx)
            .ok_or_else(|| Error::Numerical(alloc::format!("image of node {} not found", id.0)))?;
        node_map.push(target);
    }
    Ok((image, PosetMap { node_map }))
}

/// Whether `m` is a bijection from `source` onto `target` that preserves and
/// reflects the order. The trivial presheaf has one-point components, so its
/// automorphisms over an order isomorphism are exactly these maps. For a
/// self-map pass the same poset twice.
pub fn trivial_presheaf_automorphism(source: &ContextPoset, target: &ContextPoset, m: &PosetMap) -> bool {
    let n = source.len();
    if m.node_map.len() != n || target.len() != n {
        return false;
    }
    let mut hit = alloc::vec![false; n];
    for &j in &m.node_map {
        if j.0 >= n || hit[j.0] {
            return false;
        }
        hit[j.0] = true;
    }
    source.node_ids().all(|i| source.node_ids().all(|j| source.le(i, j) == target.le(m.image(i), m.image(j))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    /// `max |phi(a . b) - phi(a) . phi(b)|`
    pub jordan_residual: f64,
    /// +1 if `phi(i[a,b]) = i[phi a, phi b]`, -1 if it equals minus that,
    /// `None` when `a` and `b` commute within tolerance.
    pub commutator_sign: Option<i8>,
    /// Mismatch of the better-fitting sign.
    pub sign_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JordanReport {
    pub pairs: Vec<PairReport>,
    pub max_jordan_residual: f64,
    pub preserved: bool,
}

pub fn jordan_check(s: &SymmetryOp, samples: &[(ComplexMatrix, ComplexMatrix)], tol: f64) -> JordanReport {
    let mut pairs = Vec::with_capacity(samples.len());
    for (a, b) in samples {
        let (fa, fb) = (s.apply(a), s.apply(b));
        let jordan_residual = s.apply(&jordan_product(a, b)).dist(&jordan_product(&fa, &fb));
        let lhs = s.apply(&hermitian_commutator(a, b));
        let rhs = hermitian_commutator(&fa, &fb);
        let plus = lhs.dist(&rhs);
        let minus = (&lhs + &rhs).max_abs();
        let commutator_sign = if rhs.max_abs() <= tol {
            None
        } else if plus <= minus {
            Some(1)
        } else {
            Some(-1)
        };
        pairs.push(PairReport { jordan_residual, commutator_sign, sign_residual: plus.min(minus) });
    }
    let max_jordan_residual = pairs.iter().map(|p| p.jordan_residual).fold(0.0, f64::max);
    JordanReport { preserved: max_jordan_residual <= tol, max_jordan_residual, pairs }
}

/// `max |tr(phi(p) phi(q)) - tr(p q)|` over all pairs in `projections`.
pub fn transition_probability_defect(s: &SymmetryOp, projections: &[ComplexMatrix]) -> f64 {
    let images: Vec<ComplexMatrix> = projections.iter().map(|p| s.apply(p)).collect();
    let mut worst = 0.0f64;
    for i in 0..projections.len() {
        for j in 0..projections.len() {
            let before = projections[i].trace_product(&projections[j]).re;
            let after = images[i].trace_product(&images[j]).re;
            worst = worst.max((before - after).abs());
        }
    }
    worst
}
