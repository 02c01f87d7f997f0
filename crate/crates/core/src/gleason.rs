//! The probabilistic presheaf: one probability vector per context, restricted
//! by marginalisation.
//!
//! Sections from density matrices are exact by linearity. Going back,
//! [`StateReconstructor`] solves `tr(X p) = mu(p)` over self-adjoint `X` for
//! every registered projection; the catalog decides whether the answer is
//! unique. Finite and complete additivity coincide in finite dimensions, so
//! only the former is modelled.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::contexts::{ContextPoset, NodeId, ProjId};
use crate::eigen::eigvalsh;
use crate::lp::{LinearProgram, LpOutcome};
use crate::matrix::ComplexMatrix;
use crate::opalg::{spectral_atoms, DensityMatrix, Projection};
use crate::presheaf::Presheaf;
use crate::real::{from_hermitian_coordinates, trace_functional, LeastSquares, RealMatrix};
use crate::tol::{PSD_FLOOR, RANK_TOL, RESIDUAL_TOL};
use crate::{Error, Result};

/// Probability vector over the atoms of one context.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextMeasure {
    pub context: NodeId,
    pub weights: Vec<f64>,
}

impl ContextMeasure {
    /// Validates normalisation and clamps weights in `[-tol, 0)` to zero.
    pub fn new(context: NodeId, weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(w) = weights.iter().find(|&&w| w < -tol) {
            return Err(Error::InvalidMeasure(format!("negative weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol * weights.len().max(1) as f64 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self { context, weights: weights.into_iter().map(|w| w.max(0.0)).collect() })
    }
}

/// Marginalises weights on the atoms of `from` to the coarser node `to`.
pub fn marginalise(poset: &ContextPoset, from: NodeId, weights: &[f64], to: NodeId) -> Result<Vec<f64>> {
    let n = poset.node(from)?.len();
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: weights.len() });
    }
    let mut out = vec![0.0; poset.node(to)?.len()];
    for (a, &w) in weights.iter().enumerate() {
        out[poset.dominating_atom(from, a, to)?] += w;
    }
    Ok(out)
}

/// Weight vectors on a down-closed set of nodes. Weights are stored raw so
/// that sections of indefinite operators can be represented too.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbSection {
    pub assignment: BTreeMap<NodeId, Vec<f64>>,
}

impl ProbSection {
    pub fn measure(&self, node: NodeId) -> Option<&[f64]> {
        self.assignment.get(&node).map(Vec::as_slice)
    }

    /// Completes `given` to every node below a given node, by marginalising
    /// from the first given node above it.
    pub fn extend_down(poset: &ContextPoset, given: BTreeMap<NodeId, Vec<f64>>) -> Result<Self> {
        let mut assignment = given.clone();
        for id in poset.node_ids() {
            if assignment.contains_key(&id) {
                continue;
            }
            if let Some((&from, w)) = given.iter().find(|(&j, _)| poset.le(id, j)) {
                assignment.insert(id, marginalise(poset, from, w, id)?);
            }
        }
        Ok(Self { assignment })
    }

    /// Probability of a registered projection, read from any context in the
    /// domain having it as an atom.
    pub fn probability(&self, poset: &ContextPoset, p: ProjId) -> Option<f64> {
        self.assignment.iter().find_map(|(&node, w)| poset.node(node).ok()?.atom_index(p).map(|i| w[i]))
    }
}

/// `mu(p) = tr(w p)` on every node; `w` need not be positive.
pub fn section_from_operator(poset: &ContextPoset, w: &ComplexMatrix) -> Result<ProbSection> {
    if w.dim() != poset.dim() {
        return Err(Error::DimensionMismatch { expected: poset.dim(), found: w.dim() });
    }
    let probs: Vec<f64> = poset.registry().iter().map(|(_, p)| w.trace_product(p.matrix()).re).collect();
    let assignment = poset
        .node_ids()
        .map(|id| (id, poset.node_unchecked(id).atoms().iter().map(|a| probs[a.0]).collect()))
        .collect();
    Ok(ProbSection { assignment })
}

/// Born weights `tr(rho p)` on every node.
pub fn section_from_state(poset: &ContextPoset, rho: &DensityMatrix) -> Result<ProbSection> {
    section_from_operator(poset, rho.matrix())
}

/// Checks the section conditions within `tol`: nonnegative normalised
/// weights, marginalisation along every inclusion inside the domain, a
/// down-closed domain, and one probability per shared projection. Returns
/// the first violation found.
pub fn check_prob_section(poset: &ContextPoset, s: &ProbSection, tol: f64) -> core::result::Result<(), String> {
    for (&node, w) in &s.assignment {
        let n = poset.node(node).map_err(|e| format!("{e}"))?;
        if w.len() != n.len() {
            return Err(format!("node {}: {} weights for {} atoms", node.0, w.len(), n.len()));
        }
        if let Some(x) = w.iter().find(|&&x| x < -tol) {
            return Err(format!("node {}: negative weight {x}", node.0));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > tol * w.len() as f64 {
            return Err(format!("node {}: weights sum to {total}", node.0));
        }
        for i in poset.down_set(node) {
            let Some(wi) = s.assignment.get(&i) else {
                return Err(format!("domain not down-closed: node {} missing below {}", i.0, node.0));
            };
            let m = marginalise(poset, node, w, i).map_err(|e| format!("{e}"))?;
            if let Some(k) = (0..m.len()).find(|&k| (m[k] - wi[k]).abs() > tol) {
                return Err(format!("marginal of node {} at node {} atom {k} differs", node.0, i.0));
            }
        }
    }
    let mut seen: BTreeMap<ProjId, f64> = BTreeMap::new();
    for (&node, w) in &s.assignment {
        for (i, &a) in poset.node_unchecked(node).atoms().iter().enumerate() {
            let v = *seen.entry(a).or_insert(w[i]);
            if (v - w[i]).abs() > tol {
                return Err(format!("projection {} gets {v} and {}", a.0, w[i]));
            }
        }
    }
    Ok(())
}

/// Numerical rank of the real-linear span of the registered projections
/// plus the identity, inside the `n^2`-dimensional self-adjoint operators.
pub fn constraint_rank(poset: &ContextPoset) -> usize {
    StateReconstructor::new(poset).map_or(0, |r| r.rank())
}

pub fn is_informationally_complete(poset: &ContextPoset) -> bool {
    constraint_rank(poset) == poset.dim() * poset.dim()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reconstruction {
    /// Unique and positive.
    State { rho: ComplexMatrix, residual: f64, eigenvalues: Vec<f64> },
    /// Consistent but not unique; `solution_dim` counts free real parameters.
    Underdetermined { solution_dim: usize, residual: f64 },
    /// Inconsistent constraints, or a unique solution with a negative
    /// eigenvalue (reported in `eigenvalues`, `operator` holds the solution).
    Infeasible { residual: f64, eigenvalues: Option<Vec<f64>>, operator: Option<ComplexMatrix> },
}

/// Least-squares system for `tr(X p) = mu(p)` over one poset, factorised once.
pub struct StateReconstructor<'a> {
    poset: &'a ContextPoset,
    solver: LeastSquares,
}

impl<'a> StateReconstructor<'a> {
    pub fn new(poset: &'a ContextPoset) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = poset.registry().iter().map(|(_, p)| trace_functional(p.matrix())).collect();
        rows.push(trace_functional(&ComplexMatrix::identity(poset.dim())));
        let solver = LeastSquares::new(RealMatrix::from_rows(rows)?)?;
        Ok(Self { poset, solver })
    }

    pub fn rank(&self) -> usize {
        self.solver.rank(RANK_TOL)
    }

    pub fn reconstruct(&self, s: &ProbSection) -> Result<Reconstruction> {
        let mut b = Vec::with_capacity(self.poset.registry().len() + 1);
        for (id, _) in self.poset.registry().iter() {
            let Some(p) = s.probability(self.poset, id) else {
                return Err(Error::InvalidSection(format!("no probability for projection {}", id.0)));
            };
            b.push(p);
        }
        b.push(1.0);
        let sol = self.solver.solve(&b, RANK_TOL)?;
        if sol.residual > RESIDUAL_TOL {
            return Ok(Reconstruction::Infeasible { residual: sol.residual, eigenvalues: None, operator: None });
        }
        let n = self.poset.dim();
        let rank = self.rank();
        if rank < n * n {
            return Ok(Reconstruction::Underdetermined { solution_dim: n * n - rank, residual: sol.residual });
        }
        let x = from_hermitian_coordinates(n, &sol.x);
        let eigenvalues = eigvalsh(&x, 1e-9)?;
        if eigenvalues[0] >= PSD_FLOOR {
            Ok(Reconstruction::State { rho: x, residual: sol.residual, eigenvalues })
        } else {
            Ok(Reconstruction::Infeasible { residual: sol.residual, eigenvalues: Some(eigenvalues), operator: Some(x) })
        }
    }
}

pub fn state_from_section(poset: &ContextPoset, s: &ProbSection) -> Result<Reconstruction> {
    StateReconstructor::new(poset)?.reconstruct(s)
}

/// A context measure written as `<v, phi(p_i) v>` with `phi` sending atom
/// `i` to the `i`-th coordinate projection of `C^k`.
#[derive(Debug, Clone)]
pub struct Dilation {
    pub context: NodeId,
    pub ancilla_dim: usize,
    pub embedding: Vec<Projection>,
    pub vector: Vec<Complex64>,
}

impl Dilation {
    pub fn recovered_weights(&self) -> Vec<f64> {
        self.embedding
            .iter()
            .map(|p| {
                let pv = p.matrix().mul_vec(&self.vector);
                self.vector.iter().zip(&pv).map(|(a, b)| (a.conj() * b).re).sum()
            })
            .collect()
    }

    /// Same dilation with `v` replaced by `e^{i alpha} v`.
    pub fn with_phase(&self, alpha: f64) -> Self {
        let phase = Complex64::from_polar(1.0, alpha);
        Self { vector: self.vector.iter().map(|z| z * phase).collect(), ..self.clone() }
    }
}

pub fn naimark_dilate(m: &ContextMeasure) -> Dilation {
    let k = m.weights.len();
    let embedding = (0..k)
        .map(|i| {
            let mut d = vec![0.0; k];
            d[i] = 1.0;
            Projection::from_matrix_unchecked(ComplexMatrix::from_diag(&d))
        })
        .collect();
    let vector = m.weights.iter().map(|&w| Complex64::new(w.max(0.0).sqrt(), 0.0)).collect();
    Dilation { context: m.context, ancilla_dim: k, embedding, vector }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CrossContext {
    Untestable { reason: String },
    Checked { pairs: usize, max_defect: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiLinearityReport {
    /// Largest `|mu(a+b) - mu(a) - mu(b)|` for observables of a single context.
    pub within_context_defect: f64,
    pub cross_context: CrossContext,
    pub reconstruction: Reconstruction,
}

/// Expectation of `a` in the context measure `w` of `node`: `sum_i A_i w_i`
/// with `A_i = tr(a p_i) / rank p_i`.
pub fn context_expectation(poset: &ContextPoset, node: NodeId, w: &[f64], a: &ComplexMatrix) -> Result<f64> {
    let atoms = poset.node(node)?.atoms();
    Ok(atoms
        .iter()
        .zip(w)
        .map(|(&p, &wi)| {
            let p = poset.projection(p);
            wi * a.trace_product(p.matrix()).re / p.rank() as f64
        })
        .sum())
}

/// Expectation of `a` evaluated through `a`'s own context: `sum lambda
/// tr(rho P_lambda)` over its spectral atoms.
fn quasi_expectation(rho: &ComplexMatrix, a: &ComplexMatrix, tol: f64) -> Result<f64> {
    Ok(spectral_atoms(a, tol)?.iter().map(|s| s.value * rho.trace_product(s.projection.matrix()).re).sum())
}

/// Linearity of the section's expectation functional: exact within each
/// context, and across contexts for the sampled pairs when the section
/// determines a state.
pub fn quasilinearity_report(
    poset: &ContextPoset,
    s: &ProbSection,
    samples: &[(ComplexMatrix, ComplexMatrix)],
) -> Result<QuasiLinearityReport> {
    let mut within = 0.0f64;
    for (&node, w) in &s.assignment {
        let ctx = poset.context(node)?;
        let k = ctx.len();
        let a = ctx.observable(&(0..k).map(|i| i as f64 + 1.0).collect::<Vec<_>>());
        let b = ctx.observable(&(0..k).map(|i| if i % 2 == 0 { 0.5 } else { -1.5 }).collect::<Vec<_>>());
        let sum = &a + &b;
        let d = context_expectation(poset, node, w, &sum)?
            - context_expectation(poset, node, w, &a)?
            - context_expectation(poset, node, w, &b)?;
        within = within.max(d.abs());
    }
    let reconstruction = state_from_section(poset, s)?;
    let cross_context = match &reconstruction {
        Reconstruction::State { rho, .. } => {
            let mut max_defect = 0.0f64;
            for (a, b) in samples {
                let sum = a + b;
                let d = quasi_expectation(rho, &sum, 1e-9)?
                    - quasi_expectation(rho, a, 1e-9)?
                    - quasi_expectation(rho, b, 1e-9)?;
                max_defect = max_defect.max(d.abs());
            }
            CrossContext::Checked { pairs: samples.len(), max_defect }
        }
        Reconstruction::Underdetermined { solution_dim, .. } => CrossContext::Untestable {
            reason: format!("linearity untestable: reconstruction underdetermined ({solution_dim} free parameters)"),
        },
        Reconstruction::Infeasible { .. } => {
            CrossContext::Untestable { reason: String::from("linearity untestable: no state reproduces the section") }
        }
    };
    Ok(QuasiLinearityReport { within_context_defect: within, cross_context, reconstruction })
}

/// Whether a probability vector is an extreme point of the simplex of
/// measures on its context: no two distinct measures average to it. Decided
/// by LP: with `mu + s = 2 w`, `mu, s >= 0`, both normalised, every `mu_l`
/// is pinned to `w_l`.
pub fn is_extreme_measure(w: &[f64], tol: f64) -> bool {
    let k = w.len();
    // variables mu_0..mu_k, s_0..s_k
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for l in 0..k {
        let mut r = vec![0.0; 2 * k];
        r[l] = 1.0;
        r[k + l] = 1.0;
        rows.push(r);
        rhs.push(2.0 * w[l]);
    }
    let mut norm = vec![0.0; 2 * k];
    norm[..k].iter_mut().for_each(|x| *x = 1.0);
    rows.push(norm);
    rhs.push(1.0);
    for l in 0..k {
        for sign in [1.0, -1.0] {
            let mut cost = vec![0.0; 2 * k];
            cost[l] = sign;
            let lp = LinearProgram { rows: rows.clone(), rhs: rhs.clone(), cost };
            match lp.solve() {
                LpOutcome::Optimal { x, .. } => {
                    if (x[l] - w[l]).abs() > tol.max(1e-9) {
                        return false;
                    }
                }
                _ => return false,
            }
        }
    }
    true
}

/// The probabilistic presheaf with a fixed family of sections as test
/// elements.
pub struct ProbabilisticPresheaf<'a> {
    pub poset: &'a ContextPoset,
    pub samples: Vec<ProbSection>,
    pub tol: f64,
}

impl Presheaf for ProbabilisticPresheaf<'_> {
    type Order = ContextPoset;
    type Element = Vec<f64>;

    fn order(&self) -> &ContextPoset {
        self.poset
    }

    fn elements(&self, node: usize) -> Vec<Vec<f64>> {
        self.samples.iter().filter_map(|s| s.measure(NodeId(node)).map(<[f64]>::to_vec)).collect()
    }

    fn restrict(&self, from: usize, to: usize, e: &Vec<f64>) -> Option<Vec<f64>> {
        marginalise(self.poset, NodeId(from), e, NodeId(to)).ok()
    }

    fn same(&self, a: &Vec<f64>, b: &Vec<f64>) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= self.tol)
    }
}
