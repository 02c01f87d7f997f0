//! Bipartite scenarios: the product of two context posets, correlation
//! tables as sections of the Bell presheaf, no-signalling, local
//! factorisability by linear programming, and classification of sections by
//! the operator that reproduces them.
//!
//! A section is quantum when its reconstructed operator `W` is positive, and
//! quantum with the opposite time orientation when only the partial
//! transpose `W^{T_2}` on the second factor is positive. Transposing the
//! first factor instead gives the same verdict, since the two differ by a
//! global transpose.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::contexts::{ContextPoset, NodeId, ProjId};
use crate::eigen::eigvalsh;
use crate::gleason::ProbSection;
use crate::matrix::ComplexMatrix;
use crate::nnls::nnls;
use crate::presheaf::{FiniteOrder, Presheaf};
use crate::real::{from_hermitian_coordinates, trace_functional, LeastSquares, RealMatrix};
use crate::spectral::enumerate_local_sections;
use crate::tol::{PSD_FLOOR, RANK_TOL, RESIDUAL_TOL};
use crate::{Error, Result};

/// Limit on the number of deterministic local strategies.
pub const MAX_STRATEGIES: usize = 1_000_000;

/// Largest table mismatch accepted from a local-model fit.
pub const FACTORISABLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductContext {
    pub left: NodeId,
    pub right: NodeId,
}

/// Componentwise order on the product of two context posets.
#[derive(Debug, Clone)]
pub struct ProductPoset {
    n1: usize,
    n2: usize,
    leq: Vec<bool>,
    covers: Vec<(ProductContext, ProductContext)>,
}

impl ProductPoset {
    pub fn new(p1: &ContextPoset, p2: &ContextPoset) -> Self {
        let (n1, n2) = (p1.len(), p2.len());
        let n = n1 * n2;
        let mut leq = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                leq[a * n + b] = p1.le(NodeId(a / n2), NodeId(b / n2)) && p2.le(NodeId(a % n2), NodeId(b % n2));
            }
        }
        let mut covers = Vec::with_capacity(p1.covers().len() * n2 + n1 * p2.covers().len());
        for &(s, l) in p1.covers() {
            for j in p2.node_ids() {
                covers.push((ProductContext { left: s, right: j }, ProductContext { left: l, right: j }));
            }
        }
        for i in p1.node_ids() {
            for &(s, l) in p2.covers() {
                covers.push((ProductContext { left: i, right: s }, ProductContext { left: i, right: l }));
            }
        }
        covers.sort();
        Self { n1, n2, leq, covers }
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, c: ProductContext) -> usize {
        c.left.0 * self.n2 + c.right.0
    }

    pub fn context(&self, index: usize) -> ProductContext {
        ProductContext { left: NodeId(index / self.n2), right: NodeId(index % self.n2) }
    }

    pub fn contexts(&self) -> impl Iterator<Item = ProductContext> + '_ {
        (0..self.len()).map(|i| self.context(i))
    }

    pub fn leq(&self, a: ProductContext, b: ProductContext) -> bool {
        self.leq[self.index(a) * self.len() + self.index(b)]
    }

    /// Covering pairs `(smaller, larger)`: a cover in one factor, equality in
    /// the other.
    pub fn covers(&self) -> &[(ProductContext, ProductContext)] {
        &self.covers
    }

    /// Transitive closure of the one-step relation that coarsens only one
    /// party's context at a time, as a flat `len x len` matrix.
    pub fn no_signalling_closure(&self, p1: &ContextPoset, p2: &ContextPoset) -> Vec<bool> {
        let n = self.len();
        let mut r = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                let (ca, cb) = (self.context(a), self.context(b));
                r[a * n + b] = (ca.right == cb.right && p1.le(ca.left, cb.left))
                    || (ca.left == cb.left && p2.le(ca.right, cb.right));
            }
        }
        for k in 0..n {
            for a in 0..n {
                if r[a * n + k] {
                    for b in 0..n {
                        if r[k * n + b] {
                            r[a * n + b] = true;
                        }
                    }
                }
            }
        }
        r
    }
}

impl FiniteOrder for ProductPoset {
    fn size(&self) -> usize {
        self.len()
    }

    fn le(&self, i: usize, j: usize) -> bool {
        self.leq[i * self.len() + j]
    }
}

/// Two context posets and their product.
#[derive(Debug, Clone)]
pub struct BellScenario {
    pub left: ContextPoset,
    pub right: ContextPoset,
    pub product: ProductPoset,
}

impl BellScenario {
    pub fn new(left: ContextPoset, right: ContextPoset) -> Self {
        let product = ProductPoset::new(&left, &right);
        Self { left, right, product }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.left.dim(), self.right.dim())
    }

    fn atom_ids(&self, c: ProductContext) -> Result<(&[ProjId], &[ProjId])> {
        Ok((self.left.node(c.left)?.atoms(), self.right.node(c.right)?.atoms()))
    }
}

/// Joint probabilities indexed by (left atom, right atom), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    pub context: ProductContext,
    pub rows: usize,
    pub cols: usize,
    pub probs: Vec<f64>,
}

impl CorrelationTable {
    pub fn new(context: ProductContext, rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: probs.len() });
        }
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { context, rows, cols, probs })
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.probs[a * self.cols + b]
    }

    pub fn left_marginal(&self) -> Vec<f64> {
        (0..self.rows).map(|a| (0..self.cols).map(|b| self.get(a, b)).sum()).collect()
    }

    pub fn right_marginal(&self) -> Vec<f64> {
        (0..self.cols).map(|b| (0..self.rows).map(|a| self.get(a, b)).sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Correlation tables on a set of product contexts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BellSection {
    pub tables: BTreeMap<ProductContext, CorrelationTable>,
}

impl BellSection {
    pub fn table(&self, c: ProductContext) -> Option<&CorrelationTable> {
        self.tables.get(&c)
    }

    /// Smallest entry over all tables; negative values cannot come from a
    /// positive operator.
    pub fn min_entry(&self) -> f64 {
        self.tables.values().flat_map(|t| t.probs.iter().copied()).fold(f64::INFINITY, f64::min)
    }

    /// Completes `given` to every product context below a given one.
    pub fn extend_down(sc: &BellScenario, given: BTreeMap<ProductContext, CorrelationTable>) -> Result<Self> {
        let mut tables = given.clone();
        for c in sc.product.contexts() {
            if tables.contains_key(&c) {
                continue;
            }
            if let Some(t) = given.values().find(|t| sc.product.leq(c, t.context)) {
                tables.insert(c, marginalise_table(sc, t, c)?);
            }
        }
        Ok(Self { tables })
    }
}

/// Marginalises a table to a smaller product context.
pub fn marginalise_table(sc: &BellScenario, t: &CorrelationTable, to: ProductContext) -> Result<CorrelationTable> {
    let from = t.context;
    let (la, ra) = sc.atom_ids(to)?;
    let mut probs = vec![0.0; la.len() * ra.len()];
    let left_map = (0..t.rows).map(|a| sc.left.dominating_atom(from.left, a, to.left)).collect::<Result<Vec<_>>>()?;
    let right_map =
        (0..t.cols).map(|b| sc.right.dominating_atom(from.right, b, to.right)).collect::<Result<Vec<_>>>()?;
    for a in 0..t.rows {
        for b in 0..t.cols {
            probs[left_map[a] * ra.len() + right_map[b]] += t.get(a, b);
        }
    }
    CorrelationTable::new(to, la.len(), ra.len(), probs)
}

/// `tr(W (p (x) q))` for every product context. `w` must be self-adjoint with
/// unit trace but need not be positive.
pub fn section_from_bipartite_state(sc: &BellScenario, w: &ComplexMatrix, tol: f64) -> Result<BellSection> {
    let (d1, d2) = sc.dims();
    if w.dim() != d1 * d2 {
        return Err(Error::DimensionMismatch { expected: d1 * d2, found: w.dim() });
    }
    let defect = w.self_adjoint_defect();
    if defect > tol {
        return Err(Error::NotSelfAdjoint { defect });
    }
    let trace = w.trace().re;
    if (trace - 1.0).abs() > tol * w.dim() as f64 {
        return Err(Error::InvalidState(format!("trace {trace} is not 1")));
    }
    let (r1, r2) = (sc.left.registry().len(), sc.right.registry().len());
    let mut cache: Vec<Option<f64>> = vec![None; r1 * r2];
    let mut value = |x: ProjId, y: ProjId| -> f64 {
        *cache[x.0 * r2 + y.0].get_or_insert_with(|| {
            let k = sc.left.projection(x).matrix().kron(sc.right.projection(y).matrix());
            w.trace_product(&k).re
        })
    };
    let mut tables = BTreeMap::new();
    for c in sc.product.contexts() {
        let (la, ra) = sc.atom_ids(c)?;
        let mut probs = Vec::with_capacity(la.len() * ra.len());
        for &x in la {
            for &y in ra {
                probs.push(value(x, y));
            }
        }
        tables.insert(c, CorrelationTable::new(c, la.len(), ra.len(), probs)?);
    }
    Ok(BellSection { tables })
}

/// Section conditions within `tol`: normalised nonnegative tables, a
/// down-closed domain, marginalisation along every inclusion, and one value
/// per product projection `p (x) q` wherever it occurs.
pub fn check_bell_section(sc: &BellScenario, s: &BellSection, tol: f64) -> core::result::Result<(), String> {
    let mut seen: BTreeMap<(ProjId, ProjId), f64> = BTreeMap::new();
    for (&c, t) in &s.tables {
        let (la, ra) = sc.atom_ids(c).map_err(|e| format!("{e}"))?;
        if t.rows != la.len() || t.cols != ra.len() {
            return Err(format!("table at ({}, {}) has the wrong shape", c.left.0, c.right.0));
        }
        if (t.total() - 1.0).abs() > tol * t.probs.len() as f64 {
            return Err(format!("table at ({}, {}) sums to {}", c.left.0, c.right.0, t.total()));
        }
        if let Some(p) = t.probs.iter().find(|&&p| p < -tol) {
            return Err(format!("table at ({}, {}) has negative entry {p}", c.left.0, c.right.0));
        }
        for below in sc.product.contexts().filter(|&b| sc.product.leq(b, c)) {
            let Some(tb) = s.tables.get(&below) else {
                return Err(format!("domain not down-closed at ({}, {})", below.left.0, below.right.0));
            };
            let m = marginalise_table(sc, t, below).map_err(|e| format!("{e}"))?;
            if m.probs.iter().zip(&tb.probs).any(|(x, y)| (x - y).abs() > tol) {
                return Err(format!(
                    "marginal of ({}, {}) at ({}, {}) differs",
                    c.left.0, c.right.0, below.left.0, below.right.0
                ));
            }
        }
        for (a, &x) in la.iter().enumerate() {
            for (b, &y) in ra.iter().enumerate() {
                let v = *seen.entry((x, y)).or_insert(t.get(a, b));
                if (v - t.get(a, b)).abs() > tol {
                    return Err(format!("product projection ({}, {}) gets two values", x.0, y.0));
                }
            }
        }
    }
    Ok(())
}

/// Each party's marginal is independent of the other party's context.
pub fn check_no_signalling(s: &BellSection, tol: f64) -> bool {
    let mut left: BTreeMap<NodeId, Vec<f64>> = BTreeMap::new();
    let mut right: BTreeMap<NodeId, Vec<f64>> = BTreeMap::new();
    let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol);
    for (&c, t) in &s.tables {
        let lm = t.left_marginal();
        match left.get(&c.left) {
            Some(prev) if !close(prev, &lm) => return false,
            Some(_) => {}
            None => {
                left.insert(c.left, lm);
            }
        }
        let rm = t.right_marginal();
        match right.get(&c.right) {
            Some(prev) if !close(prev, &rm) => return false,
            Some(_) => {}
            None => {
                right.insert(c.right, rm);
            }
        }
    }
    true
}

/// One-party marginals, one per local context, as a section of that party's
/// probabilistic presheaf.
pub fn left_marginal_section(s: &BellSection) -> ProbSection {
    let mut assignment = BTreeMap::new();
    for (&c, t) in &s.tables {
        assignment.entry(c.left).or_insert_with(|| t.left_marginal());
    }
    ProbSection { assignment }
}

pub fn right_marginal_section(s: &BellSection) -> ProbSection {
    let mut assignment = BTreeMap::new();
    for (&c, t) in &s.tables {
        assignment.entry(c.right).or_insert_with(|| t.right_marginal());
    }
    ProbSection { assignment }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TableEntry {
    pub context: ProductContext,
    pub left_atom: usize,
    pub right_atom: usize,
}

/// `sum coeffs * probs`
pub fn bell_functional_value(s: &BellSection, coeffs: &BTreeMap<TableEntry, f64>) -> Result<f64> {
    let mut total = 0.0;
    for (e, &c) in coeffs {
        let t = s
            .tables
            .get(&e.context)
            .ok_or_else(|| Error::MissingIndex(format!("no table at ({}, {})", e.context.left.0, e.context.right.0)))?;
        if e.left_atom >= t.rows || e.right_atom >= t.cols {
            return Err(Error::MissingIndex(format!(
                "atom pair ({}, {}) outside table at ({}, {})",
                e.left_atom, e.right_atom, e.context.left.0, e.context.right.0
            )));
        }
        total += c * t.get(e.left_atom, e.right_atom);
    }
    Ok(total)
}

/// CHSH functional `E00 + E01 + E10 - E11` for binary contexts, with atom 0
/// as outcome +1 and `E = sum (-1)^(a+b) p(a, b)`.
pub fn chsh_functional(left: [NodeId; 2], right: [NodeId; 2]) -> BTreeMap<TableEntry, f64> {
    let mut out = BTreeMap::new();
    for (x, &l) in left.iter().enumerate() {
        for (y, &r) in right.iter().enumerate() {
            let sign = if x == 1 && y == 1 { -1.0 } else { 1.0 };
            for a in 0..2 {
                for b in 0..2 {
                    let parity = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                    out.insert(
                        TableEntry { context: ProductContext { left: l, right: r }, left_atom: a, right_atom: b },
                        sign * parity,
                    );
                }
            }
        }
    }
    out
}

/// Deterministic local strategies for the contexts in `contexts`: pairs of
/// local sections, one per party, over the listed local contexts.
#[derive(Debug, Clone)]
pub struct Strategies {
    pub left_nodes: Vec<NodeId>,
    pub right_nodes: Vec<NodeId>,
    pub left: Vec<Vec<usize>>,
    pub right: Vec<Vec<usize>>,
}

impl Strategies {
    pub fn enumerate(sc: &BellScenario, contexts: &[ProductContext]) -> Result<Self> {
        let mut left_nodes: Vec<NodeId> = contexts.iter().map(|c| c.left).collect();
        let mut right_nodes: Vec<NodeId> = contexts.iter().map(|c| c.right).collect();
        left_nodes.sort();
        left_nodes.dedup();
        right_nodes.sort();
        right_nodes.dedup();
        let (left, lt) = enumerate_local_sections(&sc.left, &left_nodes, MAX_STRATEGIES)?;
        let (right, rt) = enumerate_local_sections(&sc.right, &right_nodes, MAX_STRATEGIES)?;
        let count = left.len().saturating_mul(right.len());
        if lt || rt || count > MAX_STRATEGIES {
            return Err(Error::InstanceTooLarge { count, limit: MAX_STRATEGIES });
        }
        Ok(Self { left_nodes, right_nodes, left, right })
    }

    pub fn len(&self) -> usize {
        self.left.len() * self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Outcome pair of strategy `k` in a product context.
    pub fn outcome(&self, k: usize, c: ProductContext) -> Option<(usize, usize)> {
        let (l, r) = (k / self.right.len(), k % self.right.len());
        let li = self.left_nodes.iter().position(|&n| n == c.left)?;
        let ri = self.right_nodes.iter().position(|&n| n == c.right)?;
        Some((self.left[l][li], self.right[r][ri]))
    }

    /// Value of a functional on the deterministic tables of strategy `k`.
    pub fn functional_value(&self, k: usize, coeffs: &BTreeMap<TableEntry, f64>) -> f64 {
        coeffs
            .iter()
            .filter(|(e, _)| self.outcome(k, e.context) == Some((e.left_atom, e.right_atom)))
            .map(|(_, &c)| c)
            .sum()
    }
}

/// Largest value of a functional over deterministic local strategies, with
/// the number of strategies enumerated.
pub fn deterministic_maximum(sc: &BellScenario, coeffs: &BTreeMap<TableEntry, f64>) -> Result<(f64, usize)> {
    let mut contexts: Vec<ProductContext> = coeffs.keys().map(|e| e.context).collect();
    contexts.dedup();
    let st = Strategies::enumerate(sc, &contexts)?;
    let max = (0..st.len()).map(|k| st.functional_value(k, coeffs)).fold(f64::NEG_INFINITY, f64::max);
    Ok((max, st.len()))
}

#[derive(Debug, Clone)]
pub enum Factorisability {
    /// Mixture of deterministic strategies reproducing the tables.
    Factorisable { strategies: Strategies, weights: Vec<(usize, f64)>, max_error: f64 },
    /// A Bell functional separating the tables from every local model:
    /// `deterministic_max < section_value`.
    NotFactorisable { functional: BTreeMap<TableEntry, f64>, constant: f64, section_value: f64, deterministic_max: f64 },
}

/// Decides whether the tables at `contexts` are a convex mixture of
/// deterministic local strategies. The feasibility problem is solved as a
/// nonnegative least-squares fit; when the fit leaves a residual, that
/// residual is the separating functional.
pub fn factorisability_lp(sc: &BellScenario, s: &BellSection, contexts: &[ProductContext]) -> Result<Factorisability> {
    let st = Strategies::enumerate(sc, contexts)?;
    let mut entries = Vec::new();
    let mut rhs = Vec::new();
    for &c in contexts {
        let t = s
            .tables
            .get(&c)
            .ok_or_else(|| Error::MissingIndex(format!("no table at ({}, {})", c.left.0, c.right.0)))?;
        for a in 0..t.rows {
            for b in 0..t.cols {
                entries.push(TableEntry { context: c, left_atom: a, right_atom: b });
                rhs.push(t.get(a, b));
            }
        }
    }
    let n = st.len();
    let mut rows: Vec<Vec<f64>> = entries
        .iter()
        .map(|e| {
            (0..n)
                .map(|k| if st.outcome(k, e.context) == Some((e.left_atom, e.right_atom)) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    rows.push(vec![1.0; n]);
    rhs.push(1.0);

    let sol = nnls(&rows, &rhs)?;
    let max_error = sol.residual.iter().map(|r| r.abs()).fold(0.0, f64::max);
    if max_error <= FACTORISABLE_TOL {
        let weights = sol.x.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(k, &w)| (k, w)).collect();
        return Ok(Factorisability::Factorisable { strategies: st, weights, max_error });
    }
    let y = sol.residual;
    let functional: BTreeMap<TableEntry, f64> = entries.iter().copied().zip(y.iter().copied()).collect();
    let constant = y[entries.len()];
    let section_value = y.iter().zip(&rhs).map(|(a, b)| a * b).sum();
    let deterministic_max =
        (0..n).map(|k| st.functional_value(k, &functional) + constant).fold(f64::NEG_INFINITY, f64::max);
    Ok(Factorisability::NotFactorisable { functional, constant, section_value, deterministic_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionVerdict {
    Quantum,
    QuantumTimeReversed,
    NonQuantum,
    Underdetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionClassification {
    pub verdict: SectionVerdict,
    pub witness: Option<ComplexMatrix>,
    /// Smallest eigenvalue of the witness.
    pub eigen_floor: Option<f64>,
    /// Smallest eigenvalue of its partial transpose on the second factor.
    pub partial_transpose_floor: Option<f64>,
    pub residual: f64,
    /// Free real parameters when underdetermined, else 0.
    pub solution_dim: usize,
    pub warnings: Vec<String>,
}

/// Least-squares system `tr(W (p (x) q)) = mu(p (x) q)` for one scenario,
/// factorised once and reusable across sections.
pub struct BellReconstructor<'a> {
    sc: &'a BellScenario,
    solver: LeastSquares,
    pairs: Vec<(ProjId, ProjId)>,
}

impl<'a> BellReconstructor<'a> {
    pub fn new(sc: &'a BellScenario) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut rows = Vec::new();
        for (x, p) in sc.left.registry().iter() {
            for (y, q) in sc.right.registry().iter() {
                pairs.push((x, y));
                rows.push(trace_functional(&p.matrix().kron(q.matrix())));
            }
        }
        let solver = LeastSquares::new(RealMatrix::from_rows(rows)?)?;
        Ok(Self { sc, solver, pairs })
    }

    pub fn rank(&self) -> usize {
        self.solver.rank(RANK_TOL)
    }

    pub fn classify(&self, s: &BellSection) -> Result<SectionClassification> {
        let mut values: BTreeMap<(ProjId, ProjId), f64> = BTreeMap::new();
        for (&c, t) in &s.tables {
            let (la, ra) = self.sc.atom_ids(c)?;
            for (a, &x) in la.iter().enumerate() {
                for (b, &y) in ra.iter().enumerate() {
                    values.entry((x, y)).or_insert(t.get(a, b));
                }
            }
        }
        let b = self
            .pairs
            .iter()
            .map(|k| {
                values.get(k).copied().ok_or_else(|| {
                    Error::InvalidSection(format!("no probability for product projection ({}, {})", k.0 .0, k.1 .0))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (d1, d2) = self.sc.dims();
        let mut warnings = Vec::new();
        if d1 < 3 || d2 < 3 {
            warnings.push(String::from("Gleason uniqueness precondition violated: local dimension below 3"));
        }
        let sol = self.solver.solve(&b, RANK_TOL)?;
        let n = d1 * d2;
        let rank = self.rank();
        let mut out = SectionClassification {
            verdict: SectionVerdict::NonQuantum,
            witness: None,
            eigen_floor: None,
            partial_transpose_floor: None,
            residual: sol.residual,
            solution_dim: 0,
            warnings,
        };
        if sol.residual > RESIDUAL_TOL {
            return Ok(out);
        }
        if rank < n * n {
            out.verdict = SectionVerdict::Underdetermined;
            out.solution_dim = n * n - rank;
            return Ok(out);
        }
        let w = from_hermitian_coordinates(n, &sol.x);
        let floor = eigvalsh(&w, 1e-9)?[0];
        out.eigen_floor = Some(floor);
        if floor >= PSD_FLOOR {
            out.verdict = SectionVerdict::Quantum;
        } else {
            let pt = w.partial_transpose_second(d1, d2)?;
            let pt_floor = eigvalsh(&pt, 1e-9)?[0];
            out.partial_transpose_floor = Some(pt_floor);
            if pt_floor >= PSD_FLOOR {
                out.verdict = SectionVerdict::QuantumTimeReversed;
            }
        }
        out.witness = Some(w);
        Ok(out)
    }
}

pub fn classify_section(sc: &BellScenario, s: &BellSection) -> Result<SectionClassification> {
    BellReconstructor::new(sc)?.classify(s)
}

/// The Bell presheaf with a fixed family of sections as test elements.
pub struct BellPresheaf<'a> {
    pub scenario: &'a BellScenario,
    pub samples: Vec<BellSection>,
    pub tol: f64,
}

impl Presheaf for BellPresheaf<'_> {
    type Order = ProductPoset;
    type Element = CorrelationTable;

    fn order(&self) -> &ProductPoset {
        &self.scenario.product
    }

    fn elements(&self, node: usize) -> Vec<CorrelationTable> {
        let c = self.scenario.product.context(node);
        self.samples.iter().filter_map(|s| s.tables.get(&c).cloned()).collect()
    }

    fn restrict(&self, _from: usize, to: usize, e: &CorrelationTable) -> Option<CorrelationTable> {
        marginalise_table(self.scenario, e, self.scenario.product.context(to)).ok()
    }

    fn same(&self, a: &CorrelationTable, b: &CorrelationTable) -> bool {
        a.context == b.context
            && a.probs.len() == b.probs.len()
            && a.probs.iter().zip(&b.probs).all(|(x, y)| (x - y).abs() <= self.tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::{generate_poset, transitive_reduction, Context};
    use crate::opalg::Ray;
    use crate::presheaf::check_functoriality;

    const TOL: f64 = 1e-9;

    fn qubit_basis(theta: f64) -> Context {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        Context::from_rays(&[Ray::from_real(&[c, s]).unwrap(), Ray::from_real(&[-s, c]).unwrap()], TOL).unwrap()
    }

    fn chsh() -> (BellScenario, [NodeId; 2], [NodeId; 2]) {
        use core::f64::consts::PI;
        let a = generate_poset(2, &[qubit_basis(0.0), qubit_basis(PI / 2.0)], TOL).unwrap();
        let b = generate_poset(2, &[qubit_basis(PI / 4.0), qubit_basis(-PI / 4.0)], TOL).unwrap();
        let ln = [a.catalog_nodes()[0], a.catalog_nodes()[1]];
        let rn = [b.catalog_nodes()[0], b.catalog_nodes()[1]];
        (BellScenario::new(a, b), ln, rn)
    }

    fn phi_plus() -> ComplexMatrix {
        let h = 0.5;
        ComplexMatrix::from_real_rows(&[
            vec![h, 0.0, 0.0, h],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![h, 0.0, 0.0, h],
        ])
        .unwrap()
    }

    #[test]
    fn product_poset_covers_match_reduction() {
        let (sc, _, _) = chsh();
        let n = sc.product.len();
        let flat: Vec<bool> = (0..n * n).map(|k| FiniteOrder::le(&sc.product, k / n, k % n)).collect();
        let reduced: Vec<(usize, usize)> =
            transitive_reduction::<NodeId>(n, &flat).into_iter().map(|(a, b)| (a.0, b.0)).collect();
        let mut ours: Vec<(usize, usize)> =
            sc.product.covers().iter().map(|&(a, b)| (sc.product.index(a), sc.product.index(b))).collect();
        ours.sort();
        let mut reduced = reduced;
        reduced.sort();
        assert_eq!(ours, reduced);
        assert_eq!(sc.product.no_signalling_closure(&sc.left, &sc.right), flat);
    }

    #[test]
    fn chsh_on_maximally_entangled_state() {
        let (sc, a, b) = chsh();
        let s = section_from_bipartite_state(&sc, &phi_plus(), TOL).unwrap();
        assert!(check_no_signalling(&s, TOL));
        assert!(check_bell_section(&sc, &s, TOL).is_ok());
        let v = bell_functional_value(&s, &chsh_functional(a, b)).unwrap();
        assert!((v.abs() - 2.0 * 2f64.sqrt()).abs() < 1e-9, "{v}");
        let (max, count) = deterministic_maximum(&sc, &chsh_functional(a, b)).unwrap();
        assert_eq!(count, 16);
        assert!((max - 2.0).abs() < 1e-12);
    }

    #[test]
    fn factorisability_both_ways() {
        let (sc, a, b) = chsh();
        let contexts: Vec<ProductContext> =
            a.iter().flat_map(|&l| b.iter().map(move |&r| ProductContext { left: l, right: r })).collect();
        let ent = section_from_bipartite_state(&sc, &phi_plus(), TOL).unwrap();
        match factorisability_lp(&sc, &ent, &contexts).unwrap() {
            Factorisability::NotFactorisable { section_value, deterministic_max, .. } => {
                assert!(section_value > deterministic_max + 1e-6);
            }
            other => panic!("{other:?}"),
        }
        let prod = ComplexMatrix::from_diag(&[0.3, 0.2, 0.3, 0.2]);
        let sep = section_from_bipartite_state(&sc, &prod, TOL).unwrap();
        match factorisability_lp(&sc, &sep, &contexts).unwrap() {
            Factorisability::Factorisable { max_error, weights, .. } => {
                assert!(max_error < 1e-9);
                assert!((weights.iter().map(|w| w.1).sum::<f64>() - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn partial_transpose_is_time_reversed_with_qubit_warning() {
        let (sc, _, _) = chsh();
        let s = section_from_bipartite_state(&sc, &phi_plus(), TOL).unwrap();
        let c = classify_section(&sc, &s).unwrap();
        // two bases per qubit do not span the 2x2 Hermitian matrices
        assert_eq!(c.verdict, SectionVerdict::Underdetermined);
        assert!(c.solution_dim > 0);
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn signalling_tables_detected() {
        let c00 = ProductContext { left: NodeId(0), right: NodeId(0) };
        let c01 = ProductContext { left: NodeId(0), right: NodeId(1) };
        let mut s = BellSection::default();
        s.tables.insert(c00, CorrelationTable::new(c00, 2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap());
        s.tables.insert(c01, CorrelationTable::new(c01, 2, 2, vec![0.9, 0.0, 0.0, 0.1]).unwrap());
        assert!(!check_no_signalling(&s, TOL));
    }

    #[test]
    fn missing_index_reported() {
        let s = BellSection::default();
        let coeffs = chsh_functional([NodeId(0), NodeId(1)], [NodeId(0), NodeId(1)]);
        assert!(matches!(bell_functional_value(&s, &coeffs), Err(Error::MissingIndex(_))));
    }

    #[test]
    fn bell_presheaf_functorial() {
        let (sc, _, _) = chsh();
        let s = section_from_bipartite_state(&sc, &phi_plus(), TOL).unwrap();
        let p = BellPresheaf { scenario: &sc, samples: vec![s], tol: 1e-12 };
        assert!(check_functoriality(&p).holds());
    }
}
