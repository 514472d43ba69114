//! Dense two-phase primal simplex for small linear programs.
//!
//! Solves `min c·x` subject to linear rows and `x >= 0`. Entering columns
//! are priced by most negative reduced cost; after a run of degenerate
//! pivots the method switches to Bland's rule, so it terminates.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row<S> {
    pub coeffs: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

/// `min objective · x` over `x >= 0` subject to `rows`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram<S = f64> {
    pub objective: Vec<S>,
    pub rows: Vec<Row<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { x: Vec<S>, value: S },
    Infeasible,
    Unbounded,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(objective: Vec<S>) -> Self {
        Self {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<S>, relation: Relation, rhs: S) {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> Result<LpOutcome<S>> {
        Tableau::build(self).solve()
    }
}

struct Tableau<S> {
    // row-major, `rows x width`; the last column is the right-hand side
    a: Vec<S>,
    rows: usize,
    width: usize,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    scratch: Vec<S>,
    n_orig: usize,
    n_cols: usize,
    artificial_from: usize,
    objective: Vec<S>,
    rhs_scale: S,
}

impl<S: Scalar> Tableau<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let n = lp.num_vars();
        let n_slack = lp.rows.iter().filter(|r| r.relation != Relation::Eq).count();
        let n_art = lp
            .rows
            .iter()
            .filter(|r| match r.relation {
                Relation::Eq => true,
                Relation::Le => r.rhs < S::zero(),
                Relation::Ge => r.rhs >= S::zero(),
            })
            .count();
        let artificial_from = n + n_slack;
        let n_cols = artificial_from + n_art;
        let width = n_cols + 1;
        let rows = lp.rows.len();

        let mut a = vec![S::zero(); rows * width];
        let mut basis = Vec::with_capacity(rows);
        let (mut slack, mut art) = (n, artificial_from);
        let mut rhs_scale = S::one();
        for (i, r) in lp.rows.iter().enumerate() {
            let row = &mut a[i * width..(i + 1) * width];
            let flip = r.rhs < S::zero();
            let sign = if flip { -S::one() } else { S::one() };
            for (v, &c) in row.iter_mut().zip(&r.coeffs) {
                *v = sign * c;
            }
            row[n_cols] = sign * r.rhs;
            rhs_scale = rhs_scale.max(r.rhs.abs());
            let rel = match (r.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (rel, _) => rel,
            };
            match rel {
                Relation::Le => {
                    row[slack] = S::one();
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -S::one();
                    slack += 1;
                    row[art] = S::one();
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = S::one();
                    basis.push(art);
                    art += 1;
                }
            }
        }
        let mut is_basic = vec![false; n_cols];
        for &b in &basis {
            is_basic[b] = true;
        }
        Self {
            a,
            rows,
            width,
            basis,
            is_basic,
            scratch: vec![S::zero(); width],
            n_orig: n,
            n_cols,
            artificial_from,
            objective: lp.objective.clone(),
            rhs_scale,
        }
    }

    fn row(&self, i: usize) -> &[S] {
        &self.a[i * self.width..(i + 1) * self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = S::one() / self.a[r * w + c];
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v = *v * inv;
        }
        self.scratch.copy_from_slice(&self.a[r * w..(r + 1) * w]);
        let nz: Vec<usize> = (0..w).filter(|&j| self.scratch[j] != S::zero()).collect();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let row = &mut self.a[i * w..(i + 1) * w];
            let f = row[c];
            if f != S::zero() {
                for &j in &nz {
                    row[j] = row[j] - f * self.scratch[j];
                }
                row[c] = S::zero();
            }
        }
        self.is_basic[self.basis[r]] = false;
        self.is_basic[c] = true;
        self.basis[r] = c;
    }

    /// Runs simplex iterations for cost vector `cost` over columns `< limit`.
    /// Returns `false` when unbounded.
    fn optimize(&mut self, cost: &[S], limit: usize) -> Result<bool> {
        let tol = S::pivot_tol();
        let rhs = self.n_cols;
        let max_iter = 64 * (self.rows + self.n_cols + 1);
        let mut reduced = vec![S::zero(); limit];
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            reduced.copy_from_slice(&cost[..limit]);
            for i in 0..self.rows {
                let cb = cost[self.basis[i]];
                if cb != S::zero() {
                    for (d, &v) in reduced.iter_mut().zip(&self.row(i)[..limit]) {
                        *d = *d - cb * v;
                    }
                }
            }
            // Dantzig pricing, Bland's rule once progress stalls.
            let bland = degenerate >= 2 * self.rows + 8;
            let mut entering: Option<(usize, S)> = None;
            for (j, &d) in reduced.iter().enumerate() {
                if self.is_basic[j] || d >= -tol {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.is_none_or(|(_, e)| d < e) {
                    entering = Some((j, d));
                }
            }
            let Some((j, _)) = entering else { return Ok(true) };

            let mut leave: Option<(usize, S)> = None;
            let mut tiny = false;
            for i in 0..self.rows {
                let row = self.row(i);
                let aij = row[j];
                if aij > tol {
                    let ratio = row[rhs] / aij;
                    let better = match leave {
                        None => true,
                        Some((bi, br)) => {
                            ratio < br || (ratio == br && self.basis[i] < self.basis[bi])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                } else if aij > S::zero() {
                    tiny = true;
                }
            }
            match leave {
                Some((r, ratio)) => {
                    if ratio > S::zero() {
                        degenerate = 0;
                    } else {
                        degenerate += 1;
                    }
                    self.pivot(r, j)
                }
                None if tiny => {
                    return Err(Error::Degeneracy(format!(
                        "pivot below {tol} in column {j}"
                    )))
                }
                None => return Ok(false),
            }
        }
        Err(Error::Degeneracy("simplex iteration limit reached".into()))
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.a.drain(r * w..(r + 1) * w);
        let b = self.basis.remove(r);
        self.is_basic[b] = false;
        self.rows -= 1;
    }

    fn solve(mut self) -> Result<LpOutcome<S>> {
        let feas_tol = S::completion_tol() * self.rhs_scale;
        let rhs = self.n_cols;
        if self.artificial_from < self.n_cols {
            let mut phase1 = vec![S::zero(); self.n_cols];
            for c in phase1.iter_mut().skip(self.artificial_from) {
                *c = S::one();
            }
            self.optimize(&phase1, self.n_cols)?;
            let infeas: S = (0..self.rows)
                .filter(|&i| self.basis[i] >= self.artificial_from)
                .map(|i| self.row(i)[rhs])
                .sum();
            if infeas > feas_tol {
                return Ok(LpOutcome::Infeasible);
            }
            // Drive remaining artificials out of the basis; drop redundant rows.
            let mut r = 0;
            while r < self.rows {
                if self.basis[r] >= self.artificial_from {
                    let col = (0..self.artificial_from)
                        .find(|&j| !self.is_basic[j] && self.row(r)[j].abs() > S::pivot_tol());
                    match col {
                        Some(j) => self.pivot(r, j),
                        None => {
                            self.remove_row(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
        }

        let mut cost = vec![S::zero(); self.n_cols];
        cost[..self.n_orig].copy_from_slice(&self.objective);
        if !self.optimize(&cost, self.artificial_from)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![S::zero(); self.n_orig];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_orig {
                x[b] = self.row(i)[rhs].max(S::zero());
            }
        }
        let value = x
            .iter()
            .zip(&self.objective)
            .map(|(&xi, &ci)| xi * ci)
            .sum();
        Ok(LpOutcome::Optimal { x, value })
    }
}
