//! Contexts and the finite context posets generated from a catalog.
//!
//! A context is a complete family of mutually orthogonal projections (its
//! atoms); the commutative algebra it spans is the context proper. One context
//! lies below another iff each of its atoms is a sum of atoms of the other.
//!
//! A [`ContextPoset`] is the down-closure of a catalog of contexts: every
//! coarsening of every catalog context is a node. Down-closure implies closure
//! under context meets and always contains the trivial context `{1}`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::matrix::ComplexMatrix;
use crate::opalg::{commutes, projection_from_ray, spectral_atoms, Projection, ProjectionKey, Ray};
use crate::presheaf::FiniteOrder;
use crate::tol::NEAR_DUPLICATE_GRID;
use crate::{Error, Result};

/// Catalog contexts with more atoms than this are refused: their down-sets
/// grow with the Bell numbers.
pub const MAX_CATALOG_ATOMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProjId(pub usize);

/// Mutually orthogonal nonzero projections summing to the identity.
#[derive(Debug, Clone)]
pub struct Context {
    atoms: Vec<Projection>,
}

impl Context {
    pub fn new(atoms: Vec<Projection>, tol: f64) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return Err(Error::InvalidContext("a context needs at least one atom".into()));
        };
        let dim = first.dim();
        let mut sum = ComplexMatrix::zeros(dim);
        for (i, p) in atoms.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
            if p.is_zero() {
                return Err(Error::InvalidContext(format!("atom {i} is zero")));
            }
            for (j, q) in atoms.iter().enumerate().take(i) {
                if !p.orthogonal_to(q, tol) {
                    return Err(Error::InvalidContext(format!("atoms {j} and {i} are not orthogonal")));
                }
            }
            sum = &sum + p.matrix();
        }
        let defect = sum.dist(&ComplexMatrix::identity(dim));
        if defect > tol * dim as f64 {
            return Err(Error::InvalidContext(format!("atoms do not sum to the identity (defect {defect:e})")));
        }
        Ok(Self { atoms })
    }

    /// Context generated by orthonormal rays; if the rays do not span the
    /// space the orthogonal complement of their span is added as a last atom.
    pub fn from_rays(rays: &[Ray], tol: f64) -> Result<Self> {
        let Some(first) = rays.first() else {
            return Err(Error::InvalidContext("no rays".into()));
        };
        let dim = first.dim();
        let mut atoms: Vec<Projection> = rays.iter().map(projection_from_ray).collect();
        if atoms.len() < dim {
            let mut rest = ComplexMatrix::identity(dim);
            for p in &atoms {
                rest = &rest - p.matrix();
            }
            atoms.push(Projection::from_matrix_unchecked(rest));
        }
        Self::new(atoms, tol)
    }

    pub fn trivial(dim: usize) -> Self {
        Self { atoms: vec![Projection::identity(dim)] }
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn atoms(&self) -> &[Projection] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// A maximal context has `dim` rank-one atoms.
    pub fn is_maximal(&self) -> bool {
        self.atoms.len() == self.dim()
    }

    /// `sum_i values[i] p_i`
    pub fn observable(&self, values: &[f64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim());
        for (p, &v) in self.atoms.iter().zip(values) {
            out = &out + &p.matrix().scale_real(v);
        }
        out
    }

    /// Whether `other` is a coarsening of `self`.
    pub fn refines(&self, other: &Self, tol: f64) -> bool {
        other.atoms.iter().all(|b| {
            let covered: usize = self.atoms.iter().filter(|a| a.le(b, tol)).map(Projection::rank).sum();
            covered == b.rank()
        })
    }
}

/// Smallest context containing every operator of a commuting family of
/// self-adjoint matrices: the common refinement of their spectral atoms.
pub fn context_from_observables(ops: &[ComplexMatrix], tol: f64) -> Result<Context> {
    let Some(first) = ops.first() else {
        return Err(Error::InvalidContext("no observables".into()));
    };
    let dim = first.dim();
    for (i, a) in ops.iter().enumerate() {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: a.dim() });
        }
        for (j, b) in ops.iter().enumerate().take(i) {
            if !commutes(a, b, tol.max(1e-12) * 10.0) {
                return Err(Error::NonCommuting { first: j, second: i });
            }
        }
    }
    let mut atoms = vec![Projection::identity(dim)];
    for a in ops {
        let spectrum = spectral_atoms(a, tol)?;
        let mut refined = Vec::new();
        for p in &atoms {
            for s in &spectrum {
                let prod = p.matrix() * s.projection.matrix();
                let q = Projection::from_matrix_unchecked(prod);
                if q.rank() > 0 {
                    refined.push(q);
                }
            }
        }
        atoms = refined;
    }
    Context::new(atoms, tol.max(1e-9) * 10.0)
}

/// Meet of two contexts: the intersection of the algebras they span. Its
/// atoms are the connected components of the overlap relation `a b != 0`
/// between atoms of the two contexts.
pub fn meet_contexts(x: &Context, y: &Context, tol: f64) -> Result<Context> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    let (nx, ny) = (x.len(), y.len());
    let mut parent: Vec<usize> = (0..nx + ny).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (i, a) in x.atoms.iter().enumerate() {
        for (j, b) in y.atoms.iter().enumerate() {
            if !a.orthogonal_to(b, tol) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, nx + j));
                parent[ri] = rj;
            }
        }
    }
    let mut blocks: BTreeMap<usize, ComplexMatrix> = BTreeMap::new();
    let mut order = Vec::new();
    for (i, a) in x.atoms.iter().enumerate() {
        let r = find(&mut parent, i);
        if !blocks.contains_key(&r) {
            order.push(r);
        }
        let m = blocks.entry(r).or_insert_with(|| ComplexMatrix::zeros(x.dim()));
        *m = &*m + a.matrix();
    }
    let atoms =
        order.into_iter().map(|r| Projection::from_matrix_unchecked(blocks.remove(&r).expect("present"))).collect();
    Context::new(atoms, tol.max(1e-9) * 10.0)
}

/// Projections identified by canonical key, with numerical fallback.
#[derive(Debug, Clone)]
pub struct ProjectionRegistry {
    tol: f64,
    items: Vec<Projection>,
    keys: Vec<ProjectionKey>,
    index: BTreeMap<ProjectionKey, ProjId>,
}

impl ProjectionRegistry {
    pub fn new(tol: f64) -> Self {
        Self { tol, items: Vec::new(), keys: Vec::new(), index: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: ProjId) -> &Projection {
        &self.items[id.0]
    }

    pub fn key(&self, id: ProjId) -> &ProjectionKey {
        &self.keys[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ProjId, &Projection)> {
        self.items.iter().enumerate().map(|(i, p)| (ProjId(i), p))
    }

    /// Id of a registered projection equal to `p` within tolerance.
    pub fn find(&self, p: &Projection) -> Option<ProjId> {
        let key = p.key();
        if let Some(&id) = self.index.get(&key) {
            if self.items[id.0].dist(p) <= self.tol {
                return Some(id);
            }
        }
        self.items.iter().position(|q| q.dim() == p.dim() && q.dist(p) <= self.tol).map(ProjId)
    }

    /// Registers `p`, returning the id of an equal projection if one exists.
    /// Projections that differ by more than the tolerance but less than the
    /// canonicalization grid are rejected.
    pub fn insert(&mut self, p: Projection) -> Result<ProjId> {
        if let Some(id) = self.find(&p) {
            return Ok(id);
        }
        let key = p.key();
        if let Some(&id) = self.index.get(&key) {
            return Err(Error::NearDuplicate { existing: id.0, distance: self.items[id.0].dist(&p) });
        }
        for (i, q) in self.items.iter().enumerate() {
            if q.dim() == p.dim() && q.rank() == p.rank() {
                let d = q.dist(&p);
                if d < NEAR_DUPLICATE_GRID {
                    return Err(Error::NearDuplicate { existing: i, distance: d });
                }
            }
        }
        let id = ProjId(self.items.len());
        self.index.insert(key.clone(), id);
        self.keys.push(key);
        self.items.push(p);
        Ok(id)
    }
}

/// A context stored in a poset, by registry ids.
#[derive(Debug, Clone)]
pub struct Node {
    atoms: Vec<ProjId>,
    /// Catalog entries equal to this node.
    catalog: Vec<usize>,
    /// Catalog entries this node is a coarsening of.
    coarsening_of: Vec<usize>,
}

impl Node {
    pub fn atoms(&self) -> &[ProjId] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn catalog_entries(&self) -> &[usize] {
        &self.catalog
    }

    pub fn coarsening_of(&self) -> &[usize] {
        &self.coarsening_of
    }

    pub fn atom_index(&self, id: ProjId) -> Option<usize> {
        self.atoms.iter().position(|&a| a == id)
    }
}

/// Finite, down-closed fragment of the context category.
#[derive(Debug, Clone)]
pub struct ContextPoset {
    dim: usize,
    tol: f64,
    registry: ProjectionRegistry,
    nodes: Vec<Node>,
    catalog_nodes: Vec<NodeId>,
    /// `leq[i * n + j]` iff node i <= node j
    leq: Vec<bool>,
    /// covering pairs `(smaller, larger)`
    covers: Vec<(NodeId, NodeId)>,
    /// `proj_le[a * r + b]` iff projection a <= projection b
    proj_le: Vec<bool>,
    bottom: NodeId,
}

/// Restricted growth strings: every set partition of `k` labelled items.
fn set_partitions(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut a = vec![0usize; k];
    fn rec(i: usize, max: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == a.len() {
            out.push(a.clone());
            return;
        }
        for v in 0..=max + 1 {
            a[i] = v;
            rec(i + 1, max.max(v), a, out);
        }
    }
    if k == 0 {
        return out;
    }
    a[0] = 0;
    rec(1, 0, &mut a, &mut out);
    out
}

/// Builds the down-closure of `catalog` inside the context category of
/// `C^dim`, with the order computed by the atom-summation test.
pub fn generate_poset(dim: usize, catalog: &[Context], tol: f64) -> Result<ContextPoset> {
    let mut registry = ProjectionRegistry::new(tol);
    let mut nodes: Vec<Node> = Vec::new();
    let mut by_atoms: BTreeMap<Vec<ProjId>, usize> = BTreeMap::new();
    let mut catalog_nodes = Vec::with_capacity(catalog.len());

    let mut add_node = |atoms: Vec<ProjId>, nodes: &mut Vec<Node>| -> usize {
        let mut key = atoms.clone();
        key.sort_unstable();
        *by_atoms.entry(key).or_insert_with(|| {
            nodes.push(Node { atoms, catalog: Vec::new(), coarsening_of: Vec::new() });
            nodes.len() - 1
        })
    };

    let mut catalog_ids = Vec::with_capacity(catalog.len());
    for (c, ctx) in catalog.iter().enumerate() {
        if ctx.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: ctx.dim() });
        }
        if ctx.len() > MAX_CATALOG_ATOMS {
            return Err(Error::TooManyAtoms { atoms: ctx.len(), limit: MAX_CATALOG_ATOMS });
        }
        let ids = ctx.atoms().iter().map(|p| registry.insert(p.clone())).collect::<Result<Vec<_>>>()?;
        let n = add_node(ids.clone(), &mut nodes);
        nodes[n].catalog.push(c);
        catalog_nodes.push(NodeId(n));
        catalog_ids.push(ids);
    }

    for (c, ctx) in catalog.iter().enumerate() {
        for rgs in set_partitions(ctx.len()) {
            let blocks = rgs.iter().copied().max().map_or(0, |m| m + 1);
            let ids = if blocks == ctx.len() {
                catalog_ids[c].clone()
            } else {
                let mut sums = vec![ComplexMatrix::zeros(dim); blocks];
                let mut ranks = vec![0usize; blocks];
                for (atom, &b) in ctx.atoms().iter().zip(&rgs) {
                    sums[b] = &sums[b] + atom.matrix();
                    ranks[b] += atom.rank();
                }
                sums.into_iter()
                    .map(|m| registry.insert(Projection::from_matrix_unchecked(m)))
                    .collect::<Result<Vec<_>>>()?
            };
            let n = add_node(ids, &mut nodes);
            if !nodes[n].coarsening_of.contains(&c) {
                nodes[n].coarsening_of.push(c);
            }
        }
    }
    let trivial_id = registry.insert(Projection::identity(dim))?;
    let bottom = NodeId(add_node(vec![trivial_id], &mut nodes));

    let r = registry.len();
    let mut proj_le = vec![false; r * r];
    for (a, pa) in registry.iter() {
        for (b, pb) in registry.iter() {
            proj_le[a.0 * r + b.0] = a == b || (pa.rank() < pb.rank() && pa.le(pb, tol.max(1e-12) * 10.0));
        }
    }

    let n = nodes.len();
    let atom_ranks: Vec<usize> = registry.iter().map(|(_, p)| p.rank()).collect();
    let mut leq = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            leq[i * n + j] = nodes[i].atoms.iter().all(|&b| {
                let covered: usize =
                    nodes[j].atoms.iter().filter(|&&a| proj_le[a.0 * r + b.0]).map(|a| atom_ranks[a.0]).sum();
                covered == atom_ranks[b.0]
            });
        }
    }
    let covers = transitive_reduction(n, &leq);

    Ok(ContextPoset { dim, tol, registry, nodes, catalog_nodes, leq, covers, proj_le, bottom })
}

/// Covering pairs `(i, j)`, `i < j` with nothing strictly between.
pub(crate) fn transitive_reduction<T: From<usize> + Copy>(n: usize, leq: &[bool]) -> Vec<(T, T)> {
    let lt = |i: usize, j: usize| i != j && leq[i * n + j];
    let mut covers = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if lt(i, j) && !(0..n).any(|k| lt(i, k) && lt(k, j)) {
                covers.push((T::from(i), T::from(j)));
            }
        }
    }
    covers
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

impl ContextPoset {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id.0).ok_or(Error::UnknownNode(id.0))
    }

    pub(crate) fn node_unchecked(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn registry(&self) -> &ProjectionRegistry {
        &self.registry
    }

    pub fn projection(&self, id: ProjId) -> &Projection {
        self.registry.get(id)
    }

    /// The trivial context `{1}`.
    pub fn bottom(&self) -> NodeId {
        self.bottom
    }

    /// Node of each catalog entry, in catalog order.
    pub fn catalog_nodes(&self) -> &[NodeId] {
        &self.catalog_nodes
    }

    /// Nodes with nothing strictly above them.
    pub fn maximal_nodes(&self) -> Vec<NodeId> {
        let n = self.len();
        (0..n).filter(|&i| !(0..n).any(|j| j != i && self.leq[i * n + j])).map(NodeId).collect()
    }

    /// Context of a node, with its projections cloned out of the registry.
    pub fn context(&self, id: NodeId) -> Result<Context> {
        let node = self.node(id)?;
        Ok(Context { atoms: node.atoms.iter().map(|&a| self.registry.get(a).clone()).collect() })
    }

    /// `i <= j`: every atom of `i` is a sum of atoms of `j`.
    pub fn leq(&self, i: NodeId, j: NodeId) -> Result<bool> {
        self.node(i)?;
        self.node(j)?;
        Ok(self.leq[i.0 * self.len() + j.0])
    }

    #[inline]
    pub(crate) fn le(&self, i: NodeId, j: NodeId) -> bool {
        self.leq[i.0 * self.nodes.len() + j.0]
    }

    /// Projection `a <= b` for registered projections.
    #[inline]
    pub fn proj_le(&self, a: ProjId, b: ProjId) -> bool {
        self.proj_le[a.0 * self.registry.len() + b.0]
    }

    /// Transitive reduction as `(smaller, larger)` pairs.
    pub fn covers(&self) -> &[(NodeId, NodeId)] {
        &self.covers
    }

    /// Nodes at or below `j`.
    pub fn down_set(&self, j: NodeId) -> Vec<NodeId> {
        self.node_ids().filter(|&i| self.le(i, j)).collect()
    }

    /// Nodes at or above `i`.
    pub fn up_set(&self, i: NodeId) -> Vec<NodeId> {
        self.node_ids().filter(|&j| self.le(i, j)).collect()
    }

    /// Index of the atom of `to` lying above atom `atom` of `from`, for
    /// `to <= from`.
    pub fn dominating_atom(&self, from: NodeId, atom: usize, to: NodeId) -> Result<usize> {
        if !self.leq(to, from)? {
            return Err(Error::NotBelow { from: from.0, to: to.0 });
        }
        let a = *self
            .node_unchecked(from)
            .atoms
            .get(atom)
            .ok_or(Error::MissingIndex(format!("atom {atom} of node {}", from.0)))?;
        self.node_unchecked(to)
            .atoms
            .iter()
            .position(|&b| self.proj_le(a, b))
            .ok_or_else(|| Error::Numerical(format!("no atom of node {} dominates", to.0)))
    }

    /// Node whose atom set equals that of `ctx`, if present.
    pub fn find_context(&self, ctx: &Context) -> Option<NodeId> {
        let mut ids = Vec::with_capacity(ctx.len());
        for p in ctx.atoms() {
            ids.push(self.registry.find(p)?);
        }
        ids.sort_unstable();
        self.nodes
            .iter()
            .position(|n| {
                let mut a = n.atoms.clone();
                a.sort_unstable();
                a == ids
            })
            .map(NodeId)
    }

    /// The stored node equal to the meet of two nodes.
    pub fn meet(&self, i: NodeId, j: NodeId) -> Result<Option<NodeId>> {
        let m = meet_contexts(&self.context(i)?, &self.context(j)?, self.tol)?;
        Ok(self.find_context(&m))
    }

    /// Pairs `(a, b)` of distinct orthogonal registered projections that are
    /// both sums of atoms of one common node.
    pub fn co_measurable_orthogonal_pairs(&self) -> Vec<(ProjId, ProjId)> {
        let r = self.registry.len();
        let mut seen = vec![false; r * r];
        let mut out = Vec::new();
        for node in &self.nodes {
            // every registered projection that is a sum of this node's atoms
            let below: Vec<ProjId> = (0..r)
                .map(ProjId)
                .filter(|&p| {
                    let covered: usize =
                        node.atoms.iter().filter(|&&a| self.proj_le(a, p)).map(|&a| self.registry.get(a).rank()).sum();
                    covered == self.registry.get(p).rank()
                })
                .collect();
            for (x, &a) in below.iter().enumerate() {
                for &b in &below[x + 1..] {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    if seen[lo.0 * r + hi.0] {
                        continue;
                    }
                    seen[lo.0 * r + hi.0] = true;
                    // sums of atoms of one context are orthogonal iff they share no atom
                    let overlap = node.atoms.iter().any(|&t| self.proj_le(t, a) && self.proj_le(t, b));
                    if !overlap {
                        out.push((lo, hi));
                    }
                }
            }
        }
        out
    }

    fn ranks_label(&self, node: &Node) -> String {
        let mut s = String::from("(");
        for (k, a) in node.atoms.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", self.registry.get(*a).rank());
        }
        s.push(')');
        s
    }

    fn provenance(&self, id: NodeId) -> String {
        let node = &self.nodes[id.0];
        if !node.catalog.is_empty() {
            let list: Vec<String> = node.catalog.iter().map(|c| format!("c{c}")).collect();
            format!("catalog {}", list.join(","))
        } else if id == self.bottom {
            String::from("trivial")
        } else {
            let list: Vec<String> = node.coarsening_of.iter().map(|c| format!("c{c}")).collect();
            format!("coarsening of {}", list.join(","))
        }
    }
}

impl FiniteOrder for ContextPoset {
    fn size(&self) -> usize {
        self.len()
    }

    fn le(&self, i: usize, j: usize) -> bool {
        self.leq[i * self.nodes.len() + j]
    }
}

/// DOT digraph of the transitive reduction. Edges point from the larger to
/// the smaller context, so maximal contexts sit on top.
pub fn export_dot(poset: &ContextPoset) -> String {
    let mut out = String::new();
    out.push_str("digraph contexts {\n");
    let _ = writeln!(out, "  // dim {} nodes {} covers {}", poset.dim, poset.len(), poset.covers.len());
    out.push_str("  rankdir=TB;\n");
    for id in poset.node_ids() {
        let node = &poset.nodes[id.0];
        let prov = poset.provenance(id);
        let _ = writeln!(out, "  // n{}: {}", id.0, prov);
        let _ = writeln!(out, "  n{} [label=\"n{} {} {}\"];", id.0, id.0, poset.ranks_label(node), prov);
    }
    for &(small, large) in &poset.covers {
        let _ = writeln!(out, "  n{} -> n{};", large.0, small.0);
    }
    out.push_str("}\n");
    out
}
