//! Dense two-phase simplex for `min c.x  s.t.  A x = b, x >= 0`.
//!
//! Dantzig pricing with a fall back to Bland's rule on degenerate stalls, so
//! degenerate problems terminate. Infeasible
//! problems come back with a Farkas vector `y` satisfying `y.A_j <= 0` for
//! every column and `y.b > 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::tol::LP_FEAS_TOL;

const PIVOT_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible { farkas: Vec<f64>, phase_one_value: f64 },
    Unbounded,
}

/// Equality-form linear program.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Constraint rows, each of length `cost.len()`.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub cost: Vec<f64>,
}

struct Tableau {
    m: usize,
    /// structural + artificial columns
    width: usize,
    t: Vec<Vec<f64>>, // m rows of width + 1 (last = rhs)
    /// reduced costs, last entry minus the objective value
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[row][col];
        for x in self.t[row].iter_mut() {
            *x /= piv;
        }
        let pivot_row = core::mem::take(&mut self.t[row]);
        for r in self.t.iter_mut().chain(core::iter::once(&mut self.obj)) {
            if r.is_empty() {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (x, p) in r.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
        self.t[row] = pivot_row;
        self.basis[row] = col;
    }

    fn set_cost(&mut self, cost: &[f64]) {
        let mut obj = cost.to_vec();
        obj.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (o, x) in obj.iter_mut().zip(&self.t[i]) {
                    *o -= cb * x;
                }
            }
        }
        self.obj = obj;
    }

    /// Minimises `cost` (length `width`), only letting columns with
    /// `allowed[j]` enter. Returns false if unbounded.
    fn optimise(&mut self, cost: &[f64], allowed: &[bool]) -> bool {
        self.set_cost(cost);
        for _ in 0..MAX_PIVOTS {
            let enter = (0..self.width)
                .filter(|&j| allowed[j] && self.obj[j] < -PIVOT_EPS)
                .min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]));
            let Some(enter) = enter else {
                return true;
            };
            let Some(row) = self.leaving_row(enter) else {
                return false;
            };
            self.pivot(row, enter);
        }
        true
    }

    /// Minimum ratio row, ties broken lexicographically on the rows of the
    /// basis inverse (the artificial block), which rules out cycling.
    fn leaving_row(&self, enter: usize) -> Option<usize> {
        let w = self.width;
        let art = w - self.m;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.t[i][enter];
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = self.t[i][w].max(0.0) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let scale = 1e-12 * (1.0 + br.abs());
                    if ratio < br - scale {
                        Some((i, ratio))
                    } else if ratio > br + scale {
                        Some((bi, br))
                    } else {
                        let ab = self.t[bi][enter];
                        let mut pick = bi;
                        for k in art..w {
                            let (x, y) = (self.t[i][k] / a, self.t[bi][k] / ab);
                            if (x - y).abs() > 1e-12 {
                                if x < y {
                                    pick = i;
                                }
                                break;
                            }
                        }
                        if pick == i {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn objective(&self) -> f64 {
        -self.obj[self.width]
    }
}

impl LinearProgram {
    pub fn feasibility(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Self {
        let n = rows.first().map_or(0, Vec::len);
        Self { rows, rhs, cost: vec![0.0; n] }
    }

    pub fn solve(&self) -> LpOutcome {
        let m = self.rows.len();
        let n = self.cost.len();
        let width = n + m;
        let mut signs = vec![1.0; m];
        let mut t = Vec::with_capacity(m);
        for i in 0..m {
            let s = if self.rhs[i] < 0.0 { -1.0 } else { 1.0 };
            signs[i] = s;
            let mut row = vec![0.0; width + 1];
            for j in 0..n {
                row[j] = s * self.rows[i][j];
            }
            row[n + i] = 1.0;
            row[width] = s * self.rhs[i];
            t.push(row);
        }
        let mut tab = Tableau { m, width, t, obj: Vec::new(), basis: (n..n + m).collect() };

        let mut phase_one_cost = vec![0.0; width];
        phase_one_cost[n..].iter_mut().for_each(|c| *c = 1.0);
        let all = vec![true; width];
        tab.optimise(&phase_one_cost, &all);
        let w = tab.objective();
        let scale = 1.0 + self.rhs.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if w > LP_FEAS_TOL * scale {
            let farkas = (0..m).map(|i| signs[i] * (1.0 - tab.obj[n + i])).collect();
            return LpOutcome::Infeasible { farkas, phase_one_value: w };
        }

        // drive artificial variables out of the basis where possible
        for i in 0..m {
            if tab.basis[i] >= n {
                if let Some(j) = (0..n).find(|&j| tab.t[i][j].abs() > 1e-9) {
                    tab.pivot(i, j);
                }
            }
        }

        let mut cost = self.cost.clone();
        cost.resize(width, 0.0);
        let mut allowed = vec![true; width];
        allowed[n..].iter_mut().for_each(|a| *a = false);
        if !tab.optimise(&cost, &allowed) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; n];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                x[b] = tab.t[i][width].max(0.0);
            }
        }
        let value = self.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome::Optimal { x, value }
    }
}
