//! The spectral presheaf and its global sections.
//!
//! A character of a context picks one atom. A global section picks one atom
//! in every context such that restrictions agree; equivalently, a 0/1
//! assignment to the registered projections with exactly one atom valued 1
//! in every context. [`find_global_section`] searches for one by
//! backtracking with propagation, [`enumerate_global_sections`] lists them by
//! brute force and serves as the oracle for the search.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::contexts::{ContextPoset, NodeId, ProjId};
use crate::matrix::ComplexMatrix;
use crate::opalg::spectral_atoms;
use crate::presheaf::Presheaf;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Character {
    pub context: NodeId,
    pub chosen_atom: usize,
}

/// Restriction of a character to a smaller context: the atom of `target`
/// dominating the chosen atom.
pub fn restrict_character(poset: &ContextPoset, ch: Character, target: NodeId) -> Result<Character> {
    let atom = poset.dominating_atom(ch.context, ch.chosen_atom, target)?;
    Ok(Character { context: target, chosen_atom: atom })
}

/// Characters on a down-closed set of nodes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpectralSection {
    pub assignment: BTreeMap<NodeId, usize>,
}

impl SpectralSection {
    pub fn character(&self, node: NodeId) -> Option<Character> {
        self.assignment.get(&node).map(|&a| Character { context: node, chosen_atom: a })
    }

    /// 0/1 value of a registered projection, if some node in the domain has
    /// it as an atom.
    pub fn value_of(&self, poset: &ContextPoset, p: ProjId) -> Option<bool> {
        self.assignment.iter().find_map(|(&node, &chosen)| {
            let atoms = poset.node(node).ok()?.atoms();
            atoms.iter().position(|&a| a == p).map(|i| i == chosen)
        })
    }

    /// Value of an observable in the algebra of `node`: its eigenvalue on
    /// the chosen atom.
    pub fn valuation(&self, poset: &ContextPoset, node: NodeId, a: &ComplexMatrix, tol: f64) -> Result<f64> {
        let chosen = *self.assignment.get(&node).ok_or(Error::UnknownNode(node.0))?;
        let ctx = poset.context(node)?;
        let p = &ctx.atoms()[chosen];
        let ap = a * p.matrix();
        let lambda = ap.trace().re / p.rank() as f64;
        if ap.dist(&p.matrix().scale_real(lambda)) > tol {
            return Err(Error::InvalidContext("observable is not in the algebra of the context".into()));
        }
        Ok(lambda)
    }

    /// 0/1 table over the registry, for reports.
    pub fn projection_values(&self, poset: &ContextPoset) -> Vec<(ProjId, bool)> {
        let mut out = BTreeMap::new();
        for (&node, &chosen) in &self.assignment {
            if let Ok(n) = poset.node(node) {
                for (i, &a) in n.atoms().iter().enumerate() {
                    out.entry(a).or_insert(i == chosen);
                }
            }
        }
        out.into_iter().collect()
    }
}

/// Both section conditions, checked exactly on the stored order: the domain
/// is down-closed, characters restrict to each other along every inclusion,
/// and every projection shared as an atom gets a single value.
pub fn verify_section(poset: &ContextPoset, s: &SpectralSection) -> bool {
    for (&node, &chosen) in &s.assignment {
        let Ok(n) = poset.node(node) else { return false };
        if chosen >= n.len() {
            return false;
        }
    }
    for (&j, &cj) in &s.assignment {
        for i in poset.down_set(j) {
            let Some(&ci) = s.assignment.get(&i) else { return false };
            match restrict_character(poset, Character { context: j, chosen_atom: cj }, i) {
                Ok(r) if r.chosen_atom == ci => {}
                _ => return false,
            }
        }
    }
    let mut values: BTreeMap<ProjId, bool> = BTreeMap::new();
    for (&node, &chosen) in &s.assignment {
        for (i, &a) in poset.node_unchecked(node).atoms().iter().enumerate() {
            let v = i == chosen;
            if *values.entry(a).or_insert(v) != v {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Colorable,
    NonColorable,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub backtracks: u64,
}

#[derive(Debug, Clone)]
pub struct ColoringCertificate {
    pub verdict: Verdict,
    pub section: Option<SpectralSection>,
    pub stats: SearchStats,
    pub exhausted: bool,
}

#[derive(Debug, Clone, Copy)]
struct Lit {
    var: usize,
    positive: bool,
}

#[derive(Debug, Clone)]
struct Constraint {
    lits: Vec<Lit>,
    /// exactly one literal true; otherwise at most one
    exact: bool,
}

struct Solver {
    values: Vec<Option<bool>>,
    trail: Vec<usize>,
    constraints: Vec<Constraint>,
    watch: Vec<Vec<usize>>,
    stats: SearchStats,
}

impl Solver {
    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.values[l.var].map(|v| v == l.positive)
    }

    fn assign(&mut self, var: usize, value: bool, queue: &mut Vec<usize>) -> bool {
        match self.values[var] {
            Some(v) => v == value,
            None => {
                self.values[var] = Some(value);
                self.trail.push(var);
                queue.push(var);
                true
            }
        }
    }

    fn propagate(&mut self, mut queue: Vec<usize>) -> bool {
        while let Some(var) = queue.pop() {
            for k in 0..self.watch[var].len() {
                let c = self.watch[var][k];
                let mut trues = 0;
                let mut open = 0;
                let mut last_open = None;
                for &l in &self.constraints[c].lits {
                    match self.lit_value(l) {
                        Some(true) => trues += 1,
                        Some(false) => {}
                        None => {
                            open += 1;
                            last_open = Some(l);
                        }
                    }
                }
                if trues > 1 {
                    return false;
                }
                if trues == 1 {
                    if open > 0 {
                        let lits = self.constraints[c].lits.clone();
                        for l in lits {
                            if self.lit_value(l).is_none() && !self.assign(l.var, !l.positive, &mut queue) {
                                return false;
                            }
                        }
                    }
                } else if self.constraints[c].exact {
                    match (open, last_open) {
                        (0, _) => return false,
                        (1, Some(l)) => {
                            if !self.assign(l.var, l.positive, &mut queue) {
                                return false;
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        true
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().expect("nonempty");
            self.values[v] = None;
        }
    }
}

/// Exactly-one constraints encoding the spectral presheaf: one per node, and
/// for each covering pair `i < j` and atom `b` of `i`, `v(b) = sum of v(a)`
/// over the atoms `a` of `j` below `b`.
fn build_constraints(poset: &ContextPoset) -> Vec<Constraint> {
    let mut out = Vec::new();
    for id in poset.node_ids() {
        let atoms = poset.node_unchecked(id).atoms();
        out.push(Constraint { lits: atoms.iter().map(|a| Lit { var: a.0, positive: true }).collect(), exact: true });
    }
    for &(small, large) in poset.covers() {
        for &b in poset.node_unchecked(small).atoms() {
            let mut lits = vec![Lit { var: b.0, positive: false }];
            for &a in poset.node_unchecked(large).atoms() {
                if poset.proj_le(a, b) {
                    lits.push(Lit { var: a.0, positive: true });
                }
            }
            out.push(Constraint { lits, exact: true });
        }
    }
    // orthogonal to a projection valued 1 implies 0; only for co-measurable
    // pairs, where this follows from the constraints above
    for (a, b) in poset.co_measurable_orthogonal_pairs() {
        out.push(Constraint {
            lits: vec![Lit { var: a.0, positive: true }, Lit { var: b.0, positive: true }],
            exact: false,
        });
    }
    out
}

/// Branching order: maximal nodes by descending number of atoms shared with
/// other maximal nodes, ties by id; then every remaining node by id.
fn branch_order(poset: &ContextPoset) -> Vec<NodeId> {
    let maximal = poset.maximal_nodes();
    let mut occurrences: BTreeMap<ProjId, usize> = BTreeMap::new();
    for &m in &maximal {
        for &a in poset.node_unchecked(m).atoms() {
            *occurrences.entry(a).or_default() += 1;
        }
    }
    let degree = |m: NodeId| -> usize { poset.node_unchecked(m).atoms().iter().map(|a| occurrences[a] - 1).sum() };
    let mut order = maximal.clone();
    order.sort_by(|&x, &y| degree(y).cmp(&degree(x)).then(x.cmp(&y)));
    order.extend(poset.node_ids().filter(|n| !maximal.contains(n)));
    order
}

/// Backtracking search for a global section of the spectral presheaf.
pub fn find_global_section(poset: &ContextPoset) -> ColoringCertificate {
    let constraints = build_constraints(poset);
    let r = poset.registry().len();
    let mut watch = vec![Vec::new(); r];
    for (c, con) in constraints.iter().enumerate() {
        for l in &con.lits {
            watch[l.var].push(c);
        }
    }
    let mut solver =
        Solver { values: vec![None; r], trail: Vec::new(), constraints, watch, stats: SearchStats::default() };
    let order = branch_order(poset);

    // propagate unit constraints (single-atom nodes)
    let ok = {
        let mut queue = Vec::new();
        let mut ok = true;
        for c in 0..solver.constraints.len() {
            let con = &solver.constraints[c];
            if con.exact && con.lits.len() == 1 {
                let l = con.lits[0];
                if !solver.assign(l.var, l.positive, &mut queue) {
                    ok = false;
                }
            }
        }
        ok && solver.propagate(queue)
    };

    let found = ok && search(poset, &mut solver, &order, 0);
    let section = found.then(|| {
        let mut assignment = BTreeMap::new();
        for id in poset.node_ids() {
            let atoms = poset.node_unchecked(id).atoms();
            let chosen = atoms.iter().position(|a| solver.values[a.0] == Some(true)).expect("resolved");
            assignment.insert(id, chosen);
        }
        SpectralSection { assignment }
    });
    ColoringCertificate {
        verdict: if found { Verdict::Colorable } else { Verdict::NonColorable },
        section,
        stats: solver.stats,
        exhausted: !found,
    }
}

fn search(poset: &ContextPoset, solver: &mut Solver, order: &[NodeId], from: usize) -> bool {
    let next = order[from..]
        .iter()
        .position(|&n| !poset.node_unchecked(n).atoms().iter().any(|a| solver.values[a.0] == Some(true)));
    let Some(offset) = next else { return true };
    let pos = from + offset;
    let atoms: Vec<ProjId> = poset.node_unchecked(order[pos]).atoms().to_vec();
    for a in atoms {
        if solver.values[a.0] == Some(false) {
            continue;
        }
        solver.stats.nodes_expanded += 1;
        let mark = solver.trail.len();
        let mut queue = Vec::new();
        if solver.assign(a.0, true, &mut queue) && solver.propagate(queue) && search(poset, solver, order, pos + 1) {
            return true;
        }
        solver.undo_to(mark);
        solver.stats.backtracks += 1;
    }
    false
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub sections: Vec<SpectralSection>,
    pub truncated: bool,
    /// Number of raw choice tuples over the maximal nodes.
    pub space: u128,
}

/// Product of the atom counts of the maximal nodes.
pub fn assignment_space(poset: &ContextPoset) -> u128 {
    poset.maximal_nodes().iter().map(|&m| poset.node_unchecked(m).len() as u128).product()
}

/// Every global section, by running through all atom choices on the maximal
/// nodes and keeping the tuples whose restrictions agree on every node.
/// Sections come out in lexicographic order of the maximal choices, which
/// is lexicographic in node order. Stops after `cap` sections.
pub fn enumerate_global_sections(poset: &ContextPoset, cap: usize) -> Enumeration {
    let maximal = poset.maximal_nodes();
    let space = assignment_space(poset);
    // restriction tables: restrict[m][atom] = atom index at each node below m
    let restrict: Vec<Vec<Vec<Option<usize>>>> = maximal
        .iter()
        .map(|&m| {
            (0..poset.node_unchecked(m).len())
                .map(|a| poset.node_ids().map(|c| poset.dominating_atom(m, a, c).ok()).collect())
                .collect()
        })
        .collect();
    let above: Vec<Vec<usize>> =
        poset.node_ids().map(|c| (0..maximal.len()).filter(|&k| poset.le(c, maximal[k])).collect()).collect();

    let mut sections = Vec::new();
    let mut truncated = false;
    let mut choice = vec![0usize; maximal.len()];
    let sizes: Vec<usize> = maximal.iter().map(|&m| poset.node_unchecked(m).len()).collect();
    'outer: loop {
        let mut assignment = BTreeMap::new();
        let mut consistent = true;
        for c in 0..poset.len() {
            let mut value = None;
            for &k in &above[c] {
                let v = restrict[k][choice[k]][c];
                match value {
                    None => value = v,
                    Some(x) if Some(x) != v => {
                        consistent = false;
                        break;
                    }
                    _ => {}
                }
            }
            if !consistent {
                break;
            }
            match value {
                Some(v) => {
                    assignment.insert(NodeId(c), v);
                }
                None => {
                    consistent = false;
                    break;
                }
            }
        }
        if consistent {
            if sections.len() == cap {
                truncated = true;
                break 'outer;
            }
            sections.push(SpectralSection { assignment });
        }
        // odometer, last maximal node fastest
        let mut k = maximal.len();
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < sizes[k] {
                break;
            }
            choice[k] = 0;
        }
    }
    Enumeration { sections, truncated, space }
}

/// Atom choices on the nodes `tops` that extend to a section over their
/// down-closure: any two choices restrict to the same character on every
/// node below both. Returns at most `cap` choice vectors (indexed like
/// `tops`) and whether more exist.
pub fn enumerate_local_sections(poset: &ContextPoset, tops: &[NodeId], cap: usize) -> Result<(Vec<Vec<usize>>, bool)> {
    for &t in tops {
        poset.node(t)?;
    }
    let sizes: Vec<usize> = tops.iter().map(|&t| poset.node_unchecked(t).len()).collect();
    // shared[c] = (top index, restriction per atom) for tops above node c
    let mut shared: Vec<Vec<(usize, Vec<usize>)>> = Vec::new();
    for c in poset.node_ids() {
        let above: Vec<(usize, Vec<usize>)> = tops
            .iter()
            .enumerate()
            .filter(|(_, &t)| poset.le(c, t))
            .map(|(k, &t)| {
                let r = (0..sizes[k]).map(|a| poset.dominating_atom(t, a, c)).collect::<Result<Vec<_>>>();
                r.map(|r| (k, r))
            })
            .collect::<Result<Vec<_>>>()?;
        if above.len() > 1 && poset.node_unchecked(c).len() > 1 {
            shared.push(above);
        }
    }
    let mut out = Vec::new();
    let mut choice = vec![0usize; tops.len()];
    loop {
        let ok = shared.iter().all(|above| {
            let first = above[0].1[choice[above[0].0]];
            above[1..].iter().all(|(k, r)| r[choice[*k]] == first)
        });
        if ok {
            if out.len() == cap {
                return Ok((out, true));
            }
            out.push(choice.clone());
        }
        let mut k = tops.len();
        loop {
            if k == 0 {
                return Ok((out, false));
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < sizes[k] {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// `c` is a function of `a` and of `b`: constant on every spectral atom of
/// each.
pub fn ks_triple_check(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix, tol: f64) -> bool {
    let n = c.dim();
    if a.dim() != n || b.dim() != n {
        return false;
    }
    let function_of = |x: &ComplexMatrix| -> bool {
        let Ok(atoms) = spectral_atoms(x, tol) else { return false };
        atoms.iter().all(|s| {
            let p = s.projection.matrix();
            let cp = c * p;
            let lambda = cp.trace().re / s.projection.rank() as f64;
            cp.dist(&p.scale_real(lambda)) <= tol.max(1e-12) * 10.0
        })
    };
    c.is_self_adjoint(tol) && function_of(a) && function_of(b)
}

/// The spectral presheaf of a poset, with every character as test element.
pub struct SpectralPresheaf<'a> {
    pub poset: &'a ContextPoset,
}

impl Presheaf for SpectralPresheaf<'_> {
    type Order = ContextPoset;
    type Element = Character;

    fn order(&self) -> &ContextPoset {
        self.poset
    }

    fn elements(&self, node: usize) -> Vec<Character> {
        let n = self.poset.node_unchecked(NodeId(node)).len();
        (0..n).map(|a| Character { context: NodeId(node), chosen_atom: a }).collect()
    }

    fn restrict(&self, _from: usize, to: usize, e: &Character) -> Option<Character> {
        restrict_character(self.poset, *e, NodeId(to)).ok()
    }

    fn same(&self, a: &Character, b: &Character) -> bool {
        a == b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::{generate_poset, Context};
    use crate::opalg::{projection_from_ray, Ray};
    use crate::presheaf::check_functoriality;

    const TOL: f64 = 1e-9;

    fn ctx(rays: &[[f64; 3]]) -> Context {
        let rays: Vec<Ray> = rays.iter().map(|r| Ray::from_real(r).unwrap()).collect();
        Context::from_rays(&rays, TOL).unwrap()
    }

    fn standard() -> Context {
        ctx(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    fn rotated() -> Context {
        ctx(&[[1.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, -1.0]])
    }

    #[test]
    fn restriction_examples() {
        let poset = generate_poset(3, &[standard()], TOL).unwrap();
        let top = poset.catalog_nodes()[0];
        let ch = Character { context: top, chosen_atom: 1 };
        assert_eq!(restrict_character(&poset, ch, top).unwrap(), ch);
        let e1 = projection_from_ray(&Ray::from_real(&[1.0, 0.0, 0.0]).unwrap());
        let v1 = poset.find_context(&Context::new(vec![e1.clone(), e1.complement()], TOL).unwrap()).unwrap();
        let r = restrict_character(&poset, ch, v1).unwrap();
        assert_eq!(poset.projection(poset.node(v1).unwrap().atoms()[r.chosen_atom]).rank(), 2);
        let b = restrict_character(&poset, ch, poset.bottom()).unwrap();
        assert_eq!(b.chosen_atom, 0);
        assert!(restrict_character(&poset, Character { context: v1, chosen_atom: 0 }, top).is_err());
    }

    #[test]
    fn single_basis_has_three_sections() {
        let poset = generate_poset(3, &[standard()], TOL).unwrap();
        let cert = find_global_section(&poset);
        assert_eq!(cert.verdict, Verdict::Colorable);
        assert!(verify_section(&poset, cert.section.as_ref().unwrap()));
        let all = enumerate_global_sections(&poset, 100);
        assert_eq!(all.sections.len(), 3);
        assert!(!all.truncated);
        assert!(all.sections.iter().all(|s| verify_section(&poset, s)));
    }

    #[test]
    fn disjoint_bases_multiply() {
        let s = 0.5f64.sqrt();
        let other = Context::from_rays(
            &[
                Ray::from_real(&[s, s, 0.0]).unwrap(),
                Ray::from_real(&[0.5, -0.5, s]).unwrap(),
                Ray::from_real(&[0.5, -0.5, -s]).unwrap(),
            ],
            TOL,
        )
        .unwrap();
        let poset = generate_poset(3, &[standard(), other], TOL).unwrap();
        assert_eq!(enumerate_global_sections(&poset, 100).sections.len(), 9);
        assert_eq!(find_global_section(&poset).verdict, Verdict::Colorable);
    }

    #[test]
    fn shared_atom_couples_choices() {
        let poset = generate_poset(3, &[standard(), rotated()], TOL).unwrap();
        // p1 chosen in both, or one of the two other atoms in each
        assert_eq!(enumerate_global_sections(&poset, 100).sections.len(), 1 + 2 * 2);
    }

    #[test]
    fn truncation_flag() {
        let poset = generate_poset(3, &[standard()], TOL).unwrap();
        let e = enumerate_global_sections(&poset, 2);
        assert_eq!(e.sections.len(), 2);
        assert!(e.truncated);
    }

    #[test]
    fn verify_rejects_mismatched_shared_projection() {
        let poset = generate_poset(3, &[standard(), rotated()], TOL).unwrap();
        let mut s = find_global_section(&poset).section.unwrap();
        let [a, b] = [poset.catalog_nodes()[0], poset.catalog_nodes()[1]];
        // p1 is atom 0 in both catalog contexts
        s.assignment.insert(a, 0);
        s.assignment.insert(b, 1);
        assert!(!verify_section(&poset, &s));
    }

    #[test]
    fn verify_rejects_edge_incompatibility() {
        let poset = generate_poset(3, &[standard()], TOL).unwrap();
        let mut s = enumerate_global_sections(&poset, 10).sections.remove(0);
        let top = poset.catalog_nodes()[0];
        let below = poset.down_set(top).into_iter().find(|&n| n != top && poset.node(n).unwrap().len() == 2).unwrap();
        let cur = s.assignment[&below];
        s.assignment.insert(below, 1 - cur);
        assert!(!verify_section(&poset, &s));
    }

    #[test]
    fn valuation_obeys_spectrum_rule() {
        let poset = generate_poset(3, &[standard()], TOL).unwrap();
        let top = poset.catalog_nodes()[0];
        let a = ComplexMatrix::from_diag(&[1.0, 2.0, 5.0]);
        for s in enumerate_global_sections(&poset, 10).sections {
            let v = s.valuation(&poset, top, &a, TOL).unwrap();
            assert!([1.0, 2.0, 5.0].iter().any(|x| (x - v).abs() < 1e-12));
            let a2 = &a * &a;
            assert!((s.valuation(&poset, top, &a2, TOL).unwrap() - v * v).abs() < 1e-9);
        }
    }

    #[test]
    fn ks_triples() {
        let a = ComplexMatrix::from_diag(&[1.0, 2.0, 3.0]);
        assert!(ks_triple_check(&a, &a, &a, TOL));
        let b = ComplexMatrix::from_diag(&[4.0, 4.0, 1.0]);
        assert!(ks_triple_check(&a, &b, &ComplexMatrix::identity(3), TOL));
        let ra = standard().observable(&[1.0, 2.0, 3.0]);
        let rb = rotated().observable(&[1.0, 2.0, 3.0]);
        let p1 = ComplexMatrix::from_diag(&[1.0, 0.0, 0.0]);
        assert!(!crate::opalg::commutes(&ra, &rb, TOL));
        assert!(ks_triple_check(&ra, &rb, &p1, TOL));
        let p2 = ComplexMatrix::from_diag(&[0.0, 1.0, 0.0]);
        assert!(!ks_triple_check(&ra, &rb, &p2, TOL));
    }

    #[test]
    fn spectral_presheaf_functorial() {
        let poset = generate_poset(3, &[standard(), rotated()], TOL).unwrap();
        assert!(check_functoriality(&SpectralPresheaf { poset: &poset }).holds());
    }
}
