//! Linear relaxation backend.
//!
//! [`DualSimplex`] is a revised dual simplex over a dense explicit basis
//! inverse. Structural variables must have finite bounds, which keeps every
//! basis dual feasible after a bound flip, so rows can be added, removed and
//! bounds changed between solves while keeping the warm start.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

/// Stable handle of a row, valid until the row is removed.
pub type RowId = usize;

pub trait RelaxationBackend {
    /// Replaces the whole problem by `min c^T x` with `lower <= x <= upper`.
    fn load(&mut self, objective: &[f64], lower: &[f64], upper: &[f64]);
    fn add_row(&mut self, coeffs: &[(usize, f64)], sense: Sense, rhs: f64) -> RowId;
    fn remove_rows(&mut self, ids: &[RowId]);
    fn set_bounds(&mut self, var: usize, lower: f64, upper: f64);
    fn bounds(&self, var: usize) -> (f64, f64);
    fn solve(&mut self) -> LpStatus;
    fn objective(&self) -> f64;
    fn primal(&self) -> Vec<f64>;
    fn row_activity(&self, id: RowId) -> Option<f64>;
    fn num_rows(&self) -> usize;
    fn num_cols(&self) -> usize;
}

#[derive(Debug, Clone)]
struct LpRow {
    id: RowId,
    coeffs: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    Lower,
    Upper,
}

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;

#[derive(Debug, Clone, Default)]
pub struct DualSimplex {
    n: usize,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<LpRow>,
    row_index: HashMap<RowId, usize>,
    next_id: RowId,
    col_entries: Vec<Vec<(usize, f64)>>,
    // columns 0..n are structural, n + i is the slack of row i
    head: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    d: Vec<f64>,
    binv: Vec<Vec<f64>>,
    factored: bool,
    since_refactor: usize,
    objective: f64,
    pub iterations: usize,
}

impl DualSimplex {
    pub fn new() -> Self {
        Self::default()
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn col_bounds(&self, j: usize) -> (f64, f64) {
        if j < self.n {
            (self.lower[j], self.upper[j])
        } else {
            match self.rows[j - self.n].sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            }
        }
    }

    fn col_cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.cost[j]
        } else {
            0.0
        }
    }

    /// `sum_i v_i a_ij` for column `j`.
    fn dot_column(&self, v: &[f64], j: usize) -> f64 {
        if j < self.n {
            self.col_entries[j].iter().map(|&(i, a)| v[i] * a).sum()
        } else {
            v[j - self.n]
        }
    }

    fn rebuild_columns(&mut self) {
        self.col_entries = vec![Vec::new(); self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                self.col_entries[j].push((i, a));
            }
        }
        self.row_index = self.rows.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    }

    fn nonbasic_state_for(&self, j: usize, dj: f64) -> VarState {
        let (l, u) = self.col_bounds(j);
        if l == u || u.is_infinite() {
            VarState::Lower
        } else if l.is_infinite() || dj < 0.0 {
            VarState::Upper
        } else {
            VarState::Lower
        }
    }

    fn slack_basis(&mut self) {
        let (n, m) = (self.n, self.m());
        self.head = (n..n + m).collect();
        self.state = vec![VarState::Lower; n + m];
        for k in 0..m {
            self.state[n + k] = VarState::Basic(k);
        }
        for j in 0..n {
            self.state[j] = self.nonbasic_state_for(j, self.cost[j]);
        }
        self.binv = (0..m)
            .map(|k| {
                let mut row = vec![0.0; m];
                row[k] = 1.0;
                row
            })
            .collect();
        self.factored = true;
        self.since_refactor = 0;
        self.recompute_duals();
        self.recompute_primal();
    }

    /// Gauss-Jordan inversion of the current basis. Returns false if singular.
    fn invert_basis(&mut self) -> bool {
        let m = self.m();
        let mut mat = vec![vec![0.0; m]; m];
        for (k, &j) in self.head.iter().enumerate() {
            if j < self.n {
                for &(i, a) in &self.col_entries[j] {
                    mat[i][k] = a;
                }
            } else {
                mat[j - self.n][k] = 1.0;
            }
        }
        // invert mat (rows = constraints, cols = basis positions); result rows = positions
        let mut inv: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut r = vec![0.0; m];
                r[i] = 1.0;
                r
            })
            .collect();
        for c in 0..m {
            let p = (c..m).max_by(|&a, &b| mat[a][c].abs().partial_cmp(&mat[b][c].abs()).unwrap()).unwrap();
            if mat[p][c].abs() < 1e-11 {
                return false;
            }
            mat.swap(p, c);
            inv.swap(p, c);
            let piv = mat[c][c];
            for v in mat[c].iter_mut() {
                *v /= piv;
            }
            for v in inv[c].iter_mut() {
                *v /= piv;
            }
            for r in 0..m {
                if r != c && mat[r][c] != 0.0 {
                    let f = mat[r][c];
                    let (src_m, src_i) = (mat[c].clone(), inv[c].clone());
                    for (v, s) in mat[r].iter_mut().zip(&src_m) {
                        *v -= f * s;
                    }
                    for (v, s) in inv[r].iter_mut().zip(&src_i) {
                        *v -= f * s;
                    }
                }
            }
        }
        self.binv = inv;
        true
    }

    fn recompute_duals(&mut self) {
        let m = self.m();
        let mut y = vec![0.0; m];
        for (k, &j) in self.head.iter().enumerate() {
            let c = self.col_cost(j);
            if c != 0.0 {
                for (yi, b) in y.iter_mut().zip(&self.binv[k]) {
                    *yi += c * b;
                }
            }
        }
        self.d = (0..self.n + m)
            .map(|j| match self.state[j] {
                VarState::Basic(_) => 0.0,
                _ => self.col_cost(j) - self.dot_column(&y, j),
            })
            .collect();
    }

    fn recompute_primal(&mut self) {
        let (n, m) = (self.n, self.m());
        self.x.resize(n + m, 0.0);
        let mut residual: Vec<f64> = self.rows.iter().map(|r| r.rhs).collect();
        for j in 0..n + m {
            let (l, u) = self.col_bounds(j);
            let v = match self.state[j] {
                VarState::Basic(_) => continue,
                VarState::Lower => l,
                VarState::Upper => u,
            };
            self.x[j] = v;
            if v != 0.0 {
                if j < n {
                    for &(i, a) in &self.col_entries[j] {
                        residual[i] -= a * v;
                    }
                } else {
                    residual[j - n] -= v;
                }
            }
        }
        for k in 0..m {
            self.x[self.head[k]] = self.binv[k].iter().zip(&residual).map(|(b, r)| b * r).sum();
        }
    }

    /// Fresh inverse, duals and primal values for the current basis. Falls
    /// back to the slack basis if the basis is singular or a slack is dual
    /// infeasible beyond repair.
    fn refactor(&mut self) {
        if self.head.len() != self.m() || !self.invert_basis() {
            self.slack_basis();
            return;
        }
        self.since_refactor = 0;
        self.factored = true;
        self.recompute_duals();
        for j in 0..self.n + self.m() {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let (l, u) = self.col_bounds(j);
            if l == u {
                continue;
            }
            let dj = self.d[j];
            let bad = match self.state[j] {
                VarState::Lower => dj < -DUAL_TOL,
                VarState::Upper => dj > DUAL_TOL,
                VarState::Basic(_) => false,
            };
            if bad {
                let flipped = if self.state[j] == VarState::Lower { u } else { l };
                if flipped.is_infinite() {
                    self.slack_basis();
                    return;
                }
                self.state[j] = if self.state[j] == VarState::Lower {
                    VarState::Upper
                } else {
                    VarState::Lower
                };
            }
        }
        self.recompute_primal();
    }

    fn infeasibility(&self, k: usize) -> f64 {
        let j = self.head[k];
        let (l, u) = self.col_bounds(j);
        let v = self.x[j];
        if v < l - PRIMAL_TOL {
            l - v
        } else if v > u + PRIMAL_TOL {
            v - u
        } else {
            0.0
        }
    }

    fn run(&mut self, max_iter: usize, bland: bool) -> LpStatus {
        let n = self.n;
        let m = self.m();
        let mut iter = 0;
        loop {
            if iter >= max_iter {
                return LpStatus::NumericalFailure;
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
            // leaving row
            let mut r = None;
            let mut best = 0.0;
            for k in 0..m {
                let inf = self.infeasibility(k);
                if inf > 0.0 {
                    if bland {
                        if r.is_none_or(|rk: usize| self.head[k] < self.head[rk]) {
                            r = Some(k);
                        }
                    } else if inf > best {
                        best = inf;
                        r = Some(k);
                    }
                }
            }
            let Some(r) = r else {
                if self.since_refactor > 0 {
                    self.refactor();
                    if (0..m).all(|k| self.infeasibility(k) == 0.0) {
                        return LpStatus::Optimal;
                    }
                    continue;
                }
                return LpStatus::Optimal;
            };
            let leaving = self.head[r];
            let (ll, lu) = self.col_bounds(leaving);
            let to_lower = self.x[leaving] < ll;
            let target = if to_lower { ll } else { lu };
            let rho = self.binv[r].clone();
            // entering column
            let mut alpha = vec![0.0; n + m];
            let mut candidates = Vec::new();
            for j in 0..n + m {
                let st = self.state[j];
                if matches!(st, VarState::Basic(_)) {
                    continue;
                }
                let (l, u) = self.col_bounds(j);
                if l == u {
                    continue;
                }
                let a = self.dot_column(&rho, j);
                alpha[j] = a;
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let eligible = match (to_lower, st) {
                    (true, VarState::Lower) => a < 0.0,
                    (true, VarState::Upper) => a > 0.0,
                    (false, VarState::Lower) => a > 0.0,
                    (false, VarState::Upper) => a < 0.0,
                    _ => false,
                };
                if eligible {
                    candidates.push(j);
                }
            }
            if candidates.is_empty() {
                return LpStatus::Infeasible;
            }
            let ratio = |j: usize| self.d[j].abs() / alpha[j].abs();
            let q = if bland {
                let min = candidates.iter().map(|&j| ratio(j)).fold(f64::INFINITY, f64::min);
                *candidates.iter().find(|&&j| ratio(j) <= min + 1e-12).unwrap()
            } else {
                // two-pass Harris test
                let bound = candidates
                    .iter()
                    .map(|&j| (self.d[j].abs() + DUAL_TOL) / alpha[j].abs())
                    .fold(f64::INFINITY, f64::min);
                *candidates
                    .iter()
                    .filter(|&&j| ratio(j) <= bound)
                    .max_by(|&&a, &&b| alpha[a].abs().partial_cmp(&alpha[b].abs()).unwrap().then(b.cmp(&a)))
                    .unwrap()
            };
            // column of the entering variable in the current basis
            let col: Vec<f64> = if q < n {
                let mut c = vec![0.0; m];
                for &(i, a) in &self.col_entries[q] {
                    for (ck, row) in c.iter_mut().zip(&self.binv) {
                        *ck += row[i] * a;
                    }
                }
                c
            } else {
                self.binv.iter().map(|row| row[q - n]).collect()
            };
            let piv = col[r];
            if (piv - alpha[q]).abs() > 1e-7 * (1.0 + piv.abs()) || piv.abs() < PIVOT_TOL {
                if self.since_refactor == 0 {
                    return LpStatus::NumericalFailure;
                }
                self.refactor();
                iter += 1;
                continue;
            }
            let theta_p = (self.x[leaving] - target) / piv;
            self.x[q] += theta_p;
            for (k, &ck) in col.iter().enumerate() {
                if k != r {
                    let j = self.head[k];
                    self.x[j] -= theta_p * ck;
                }
            }
            self.x[leaving] = target;
            let theta_d = self.d[q] / alpha[q];
            for j in 0..n + m {
                if alpha[j] != 0.0 && !matches!(self.state[j], VarState::Basic(_)) {
                    self.d[j] -= theta_d * alpha[j];
                }
            }
            self.d[leaving] = -theta_d;
            self.d[q] = 0.0;
            self.state[leaving] = if to_lower { VarState::Lower } else { VarState::Upper };
            self.state[q] = VarState::Basic(r);
            self.head[r] = q;
            let pivot_row: Vec<f64> = self.binv[r].iter().map(|v| v / piv).collect();
            for (k, row) in self.binv.iter_mut().enumerate() {
                if k == r {
                    continue;
                }
                let f = col[k];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
            self.binv[r] = pivot_row;
            self.since_refactor += 1;
            self.iterations += 1;
            iter += 1;
        }
    }
}

impl RelaxationBackend for DualSimplex {
    fn load(&mut self, objective: &[f64], lower: &[f64], upper: &[f64]) {
        assert_eq!(objective.len(), lower.len());
        assert_eq!(objective.len(), upper.len());
        assert!(
            lower.iter().chain(upper).all(|v| v.is_finite()),
            "structural bounds must be finite"
        );
        *self = DualSimplex {
            n: objective.len(),
            cost: objective.to_vec(),
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            ..Default::default()
        };
        self.rebuild_columns();
        self.slack_basis();
    }

    fn add_row(&mut self, coeffs: &[(usize, f64)], sense: Sense, rhs: f64) -> RowId {
        let id = self.next_id;
        self.next_id += 1;
        let i = self.m();
        let coeffs: Vec<(usize, f64)> = coeffs.iter().copied().filter(|&(_, a)| a != 0.0).collect();
        for &(j, a) in &coeffs {
            self.col_entries[j].push((i, a));
        }
        self.rows.push(LpRow { id, coeffs, sense, rhs });
        self.row_index.insert(id, i);
        // extend the inverse: new slack is basic in position i
        let mut new_row = vec![0.0; i + 1];
        for (k, &j) in self.head.iter().enumerate() {
            if j < self.n {
                let a = self.rows[i].coeffs.iter().find(|&&(c, _)| c == j).map_or(0.0, |&(_, a)| a);
                if a != 0.0 {
                    for (nr, b) in new_row.iter_mut().zip(&self.binv[k]) {
                        *nr -= a * b;
                    }
                }
            }
        }
        new_row[i] = 1.0;
        for row in self.binv.iter_mut() {
            row.push(0.0);
        }
        self.binv.push(new_row);
        self.head.push(self.n + i);
        self.state.push(VarState::Basic(i));
        self.d.push(0.0);
        let activity: f64 = self.rows[i].coeffs.iter().map(|&(j, a)| a * self.x[j]).sum();
        self.x.push(rhs - activity);
        id
    }

    fn remove_rows(&mut self, ids: &[RowId]) {
        let remove: Vec<usize> = {
            let mut v: Vec<usize> = ids.iter().filter_map(|id| self.row_index.get(id).copied()).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        if remove.is_empty() {
            return;
        }
        let n = self.n;
        let all_basic = remove.iter().all(|&i| matches!(self.state[n + i], VarState::Basic(_)));
        let removed_positions: Vec<usize> = remove
            .iter()
            .filter_map(|&i| match self.state[n + i] {
                VarState::Basic(k) => Some(k),
                _ => None,
            })
            .collect();
        let keep_row = |i: usize| remove.binary_search(&i).is_err();
        let mut new_col = vec![usize::MAX; n + self.m()];
        for (j, slot) in new_col.iter_mut().enumerate().take(n) {
            *slot = j;
        }
        let mut next = n;
        for i in 0..self.m() {
            if keep_row(i) {
                new_col[n + i] = next;
                next += 1;
            }
        }
        let old_rows = std::mem::take(&mut self.rows);
        self.rows = old_rows.into_iter().enumerate().filter(|(i, _)| keep_row(*i)).map(|(_, r)| r).collect();
        self.rebuild_columns();
        if !all_basic {
            self.slack_basis();
            return;
        }
        let keep_pos = |k: usize| !removed_positions.contains(&k);
        let old_head = std::mem::take(&mut self.head);
        self.head = old_head.iter().enumerate().filter(|(k, _)| keep_pos(*k)).map(|(_, &j)| new_col[j]).collect();
        let old_binv = std::mem::take(&mut self.binv);
        self.binv = old_binv
            .into_iter()
            .enumerate()
            .filter(|(k, _)| keep_pos(*k))
            .map(|(_, row)| row.into_iter().enumerate().filter(|(i, _)| keep_row(*i)).map(|(_, v)| v).collect())
            .collect();
        let (old_state, old_x, old_d) = (
            std::mem::take(&mut self.state),
            std::mem::take(&mut self.x),
            std::mem::take(&mut self.d),
        );
        let total = n + self.m();
        self.state = vec![VarState::Lower; total];
        self.x = vec![0.0; total];
        self.d = vec![0.0; total];
        for (j, &nj) in new_col.iter().enumerate() {
            if nj != usize::MAX {
                self.state[nj] = old_state[j];
                self.x[nj] = old_x[j];
                self.d[nj] = old_d[j];
            }
        }
        for (k, &j) in self.head.iter().enumerate() {
            self.state[j] = VarState::Basic(k);
        }
    }

    fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        assert!(lower.is_finite() && upper.is_finite());
        self.lower[var] = lower;
        self.upper[var] = upper;
        if !matches!(self.state[var], VarState::Basic(_)) {
            self.state[var] = self.nonbasic_state_for(var, self.d[var]);
        }
    }

    fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    fn solve(&mut self) -> LpStatus {
        if !self.factored {
            self.slack_basis();
        }
        self.recompute_primal();
        let size = self.n + self.m();
        let limit = 20_000 + 50 * size;
        let mut status = self.run(limit, false);
        if status == LpStatus::NumericalFailure {
            self.slack_basis();
            status = self.run(limit, true);
        }
        self.objective = (0..self.n).map(|j| self.cost[j] * self.x[j]).sum();
        status
    }

    fn objective(&self) -> f64 {
        self.objective
    }

    fn primal(&self) -> Vec<f64> {
        self.x[..self.n].to_vec()
    }

    fn row_activity(&self, id: RowId) -> Option<f64> {
        let i = *self.row_index.get(&id)?;
        Some(self.rows[i].coeffs.iter().map(|&(j, a)| a * self.x[j]).sum())
    }

    fn num_rows(&self) -> usize {
        self.m()
    }

    fn num_cols(&self) -> usize {
        self.n
    }
}
