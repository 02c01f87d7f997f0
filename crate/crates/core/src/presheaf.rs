//! Finite orders and a generic functoriality checker for presheaves on them.

use alloc::vec::Vec;

/// A finite partial order on `0..size()`.
pub trait FiniteOrder {
    fn size(&self) -> usize;
    fn le(&self, i: usize, j: usize) -> bool;
}

/// A presheaf on a finite order, given by sample elements per node and
/// restriction maps `F(j) -> F(i)` for `i <= j`.
pub trait Presheaf {
    type Order: FiniteOrder;
    type Element;

    fn order(&self) -> &Self::Order;

    /// Elements of the component at `node` to test with.
    fn elements(&self, node: usize) -> Vec<Self::Element>;

    /// `None` when the restriction is undefined, which counts as a violation.
    fn restrict(&self, from: usize, to: usize, element: &Self::Element) -> Option<Self::Element>;

    fn same(&self, a: &Self::Element, b: &Self::Element) -> bool;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FunctorialityReport {
    /// Chains `i <= j <= k` (including degenerate ones) checked per element.
    pub checks: usize,
    pub violations: usize,
}

impl FunctorialityReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Exhaustive check over all chains `i <= j <= k`: restricting `k -> j -> i`
/// agrees with `k -> i`, and restriction along `k <= k` is the identity.
pub fn check_functoriality<P: Presheaf>(p: &P) -> FunctorialityReport {
    let order = p.order();
    let n = order.size();
    let mut report = FunctorialityReport::default();
    let downs: Vec<Vec<usize>> = (0..n).map(|k| (0..n).filter(|&i| order.le(i, k)).collect()).collect();
    for k in 0..n {
        for e in p.elements(k) {
            report.checks += 1;
            match p.restrict(k, k, &e) {
                Some(same) if p.same(&same, &e) => {}
                _ => report.violations += 1,
            }
            for &j in &downs[k] {
                let Some(ej) = p.restrict(k, j, &e) else {
                    report.violations += 1;
                    continue;
                };
                for &i in &downs[j] {
                    report.checks += 1;
                    let two_step = p.restrict(j, i, &ej);
                    let direct = p.restrict(k, i, &e);
                    match (two_step, direct) {
                        (Some(a), Some(b)) if p.same(&a, &b) => {}
                        _ => report.violations += 1,
                    }
                }
            }
        }
    }
    report
}
