//! Bounded-variable dual simplex on a dense tableau.
//!
//! Every variable has finite bounds, so any basis is made dual feasible by
//! placing each nonbasic variable at the bound matching the sign of its
//! reduced cost. The engine starts from an all-artificial basis (artificials
//! fixed at zero) and runs the dual simplex to optimality, which also decides
//! feasibility. Bound changes, objective changes and right-hand-side changes
//! keep the current basis, so branch-and-bound children and repeated queries
//! on one constraint system are warm-started.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const PIVOT_TOL: f64 = 1e-9;
pub(crate) const FEAS_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-11;
const CLEANUP_TOL: f64 = 1e-12;
pub(crate) const RESIDUAL_TOL: f64 = 1e-8;
const DROP_TOL: f64 = 1e-14;
const CLEANUP_ROUNDS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
}

/// Constraint data shared between clones.
#[derive(Debug)]
struct Problem {
    m: usize,
    n: usize,
    /// Row-major `m x n`.
    a: Vec<f64>,
    row_scale: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct DualSimplex {
    prob: Arc<Problem>,
    w: usize,
    b: Vec<f64>,
    /// Row-major `m x w`: `B⁻¹ [A I]`.
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    fresh: bool,
    pivots: usize,
}

impl DualSimplex {
    /// Maximize `costᵀx` subject to `A x = b`, `lower ≤ x ≤ upper`.
    pub(crate) fn new(a: &Matrix, b: &[f64], lower: &[f64], upper: &[f64], cost: &[f64]) -> Self {
        let (m, n) = a.shape();
        let w = n + m;
        let t = vec![0.0; m * w];
        let mut a_rows = vec![0.0; m * n];
        let mut row_scale = vec![1.0; m];
        for i in 0..m {
            for j in 0..n {
                let v = a[(i, j)];
                a_rows[i * n + j] = v;
                row_scale[i] = f64::max(row_scale[i], v.abs());
            }
        }
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        lo.resize(w, 0.0);
        hi.resize(w, 0.0);
        let mut full_cost = cost.to_vec();
        full_cost.resize(w, 0.0);
        let mut sx = Self {
            prob: Arc::new(Problem { m, n, a: a_rows, row_scale }),
            w,
            b: b.to_vec(),
            t,
            beta: vec![0.0; m],
            basis: (n..w).collect(),
            state: vec![State::Basic; w],
            lower: lo,
            upper: hi,
            d: full_cost.clone(),
            cost: full_cost,
            fresh: true,
            pivots: 0,
        };
        sx.reset_basis();
        sx
    }

    /// Returns to the all-artificial basis, whose matrix is the identity.
    fn reset_basis(&mut self) {
        let (m, n, w) = (self.prob.m, self.prob.n, self.w);
        self.t.fill(0.0);
        for i in 0..m {
            self.t[i * w..i * w + n].copy_from_slice(&self.prob.a[i * n..(i + 1) * n]);
            self.t[i * w + n + i] = 1.0;
        }
        self.basis = (n..w).collect();
        self.d.copy_from_slice(&self.cost);
        for j in 0..w {
            self.state[j] = if j >= n {
                State::Basic
            } else if self.cost[j] > 0.0 && self.lower[j] < self.upper[j] {
                State::Upper
            } else {
                State::Lower
            };
        }
        for i in 0..m {
            let row = &self.prob.a[i * n..(i + 1) * n];
            let mut v = self.b[i];
            for j in 0..n {
                v -= row[j] * self.nonbasic_value(j);
            }
            self.beta[i] = v;
        }
        self.fresh = true;
        self.pivots = 0;
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            State::Upper => self.upper[j],
            _ => self.lower[j],
        }
    }

    /// Moves nonbasic `j` to `new_state`, updating basic values.
    fn move_nonbasic(&mut self, j: usize, new_state: State) {
        let old = self.nonbasic_value(j);
        self.state[j] = new_state;
        let delta = self.nonbasic_value(j) - old;
        if delta != 0.0 {
            let w = self.w;
            for (i, beta) in self.beta.iter_mut().enumerate() {
                *beta -= delta * self.t[i * w + j];
            }
        }
    }

    fn dual_feasible_state(&self, j: usize, tol: f64) -> State {
        if self.lower[j] == self.upper[j] {
            State::Lower
        } else if self.d[j] > tol {
            State::Upper
        } else if self.d[j] < -tol {
            State::Lower
        } else {
            self.state[j]
        }
    }

    pub(crate) fn set_cost(&mut self, cost: &[f64]) {
        let (m, n, w) = (self.prob.m, self.prob.n, self.w);
        self.cost[..n].copy_from_slice(cost);
        self.d.copy_from_slice(&self.cost);
        for i in 0..m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * w..(i + 1) * w];
                for (dj, tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        for i in 0..m {
            self.d[self.basis[i]] = 0.0;
        }
        for j in 0..n {
            if self.state[j] != State::Basic {
                let s = self.dual_feasible_state(j, 0.0);
                if s != self.state[j] {
                    self.move_nonbasic(j, s);
                }
            }
        }
    }

    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        if self.state[j] == State::Basic {
            self.lower[j] = lo;
            self.upper[j] = hi;
            return;
        }
        let old = self.nonbasic_value(j);
        self.lower[j] = lo;
        self.upper[j] = hi;
        let s = self.dual_feasible_state(j, 0.0);
        self.state[j] = s;
        let delta = self.nonbasic_value(j) - old;
        if delta != 0.0 {
            let w = self.w;
            for (i, beta) in self.beta.iter_mut().enumerate() {
                *beta -= delta * self.t[i * w + j];
            }
        }
    }

    /// Changes `b[row]` to `value`.
    pub(crate) fn set_rhs(&mut self, row: usize, value: f64) {
        let delta = value - self.b[row];
        if delta == 0.0 {
            return;
        }
        self.b[row] = value;
        let (w, col) = (self.w, self.prob.n + row);
        for (i, beta) in self.beta.iter_mut().enumerate() {
            *beta += delta * self.t[i * w + col];
        }
    }

    /// Values of the structural variables.
    pub(crate) fn primal(&self) -> Vec<f64> {
        let n = self.prob.n;
        let mut x: Vec<f64> = (0..n).map(|j| self.nonbasic_value(j)).collect();
        for (i, &bv) in self.basis.iter().enumerate() {
            if bv < n {
                x[bv] = self.beta[i].clamp(self.lower[bv], self.upper[bv]);
            }
        }
        x
    }

    pub(crate) fn objective(&self) -> f64 {
        self.primal().iter().zip(&self.cost).map(|(x, c)| x * c).sum()
    }

    /// Runs the dual simplex until optimality or a proof of infeasibility.
    pub(crate) fn solve(&mut self) -> Result<LpStatus> {
        let (m, w) = (self.prob.m, self.w);
        let cap = 50 * (m + w) + 1000;
        let bland_after = 10 * (m + w) + 200;
        let mut iter = 0usize;
        let mut cleanups = 0usize;
        // Warm starts accumulate rounding in the tableau; reinvert now and then.
        if self.pivots > 2 * m + 50 {
            self.refactor()?;
        }
        loop {
            iter += 1;
            if iter > cap {
                if self.fresh {
                    return Err(Error::NumericalBreakdown(format!("no convergence after {cap} pivots")));
                }
                self.refactor()?;
                iter = bland_after;
                continue;
            }
            let bland = iter > bland_after;
            let Some((r, increase)) = self.leaving_row(bland) else {
                if !self.residual_ok() {
                    if self.fresh {
                        return Err(Error::NumericalBreakdown(
                            "equality residual exceeds tolerance after reinversion".into(),
                        ));
                    }
                    self.refactor()?;
                    continue;
                }
                if cleanups < CLEANUP_ROUNDS && self.flip_dual_infeasible() {
                    cleanups += 1;
                    continue;
                }
                return Ok(LpStatus::Optimal);
            };
            match self.entering_column(r, increase, bland) {
                Some(q) => {
                    let leaving = self.basis[r];
                    let (target, st) = if increase {
                        (self.lower[leaving], State::Lower)
                    } else {
                        (self.upper[leaving], State::Upper)
                    };
                    self.pivot(r, q, target, st);
                }
                None => {
                    if self.certify_infeasible(r) || self.fresh {
                        return Ok(LpStatus::Infeasible);
                    }
                    self.refactor()?;
                }
            }
        }
    }

    /// The basic variable with the largest bound violation; `true` when it must increase.
    fn leaving_row(&self, bland: bool) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool)> = None;
        let mut best_key = 0.0;
        for i in 0..self.prob.m {
            let bv = self.basis[i];
            let (lo, hi, v) = (self.lower[bv], self.upper[bv], self.beta[i]);
            let (viol, inc) = if v < lo - FEAS_TOL {
                (lo - v, true)
            } else if v > hi + FEAS_TOL {
                (v - hi, false)
            } else {
                continue;
            };
            let key = if bland { -(bv as f64) } else { viol };
            if best.is_none() || key > best_key {
                best = Some((i, inc));
                best_key = key;
            }
        }
        best
    }

    fn entering_column(&self, r: usize, increase: bool, bland: bool) -> Option<usize> {
        let w = self.w;
        let row = &self.t[r * w..(r + 1) * w];
        let eligible = |j: usize| -> Option<f64> {
            if self.state[j] == State::Basic || self.lower[j] == self.upper[j] {
                return None;
            }
            let alpha = row[j];
            if alpha.abs() <= PIVOT_TOL {
                return None;
            }
            let at_lower = self.state[j] == State::Lower;
            // x_B(r) moves by -alpha per unit increase of x_j.
            let ok = if increase { at_lower == (alpha < 0.0) } else { at_lower == (alpha > 0.0) };
            ok.then_some(alpha)
        };
        if bland {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..w {
                if let Some(alpha) = eligible(j) {
                    let ratio = self.d[j].abs() / alpha.abs();
                    if best.is_none_or(|(_, b)| ratio < b - 1e-12) {
                        best = Some((j, ratio));
                    }
                }
            }
            return best.map(|(j, _)| j);
        }
        let mut bound = f64::INFINITY;
        for j in 0..w {
            if let Some(alpha) = eligible(j) {
                bound = bound.min((self.d[j].abs() + HARRIS_TOL) / alpha.abs());
            }
        }
        if bound == f64::INFINITY {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..w {
            if let Some(alpha) = eligible(j) {
                if self.d[j].abs() / alpha.abs() <= bound && best.is_none_or(|(_, a)| alpha.abs() > a) {
                    best = Some((j, alpha.abs()));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn pivot(&mut self, r: usize, q: usize, target: f64, leaving_state: State) {
        let (m, w) = (self.prob.m, self.w);
        let alpha = self.t[r * w + q];
        let theta = (self.beta[r] - target) / alpha;
        let entering_value = self.nonbasic_value(q) + theta;
        for i in 0..m {
            self.beta[i] -= theta * self.t[i * w + q];
        }
        let leaving = self.basis[r];
        self.state[leaving] = leaving_state;
        self.basis[r] = q;
        self.state[q] = State::Basic;
        self.beta[r] = entering_value;

        let inv = 1.0 / alpha;
        let mut nz: Vec<(usize, f64)> = Vec::new();
        for j in 0..w {
            let v = self.t[r * w + j];
            if v != 0.0 {
                let scaled = v * inv;
                self.t[r * w + j] = scaled;
                nz.push((j, scaled));
            }
        }
        self.t[r * w + q] = 1.0;
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for &(j, v) in &nz {
                let x = row[j] - f * v;
                row[j] = if x.abs() < DROP_TOL { 0.0 } else { x };
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &(j, v) in &nz {
                self.d[j] -= f * v;
            }
        }
        self.d[q] = 0.0;
        self.fresh = false;
        self.pivots += 1;
    }

    /// Flips nonbasic variables whose reduced cost has the wrong sign (left by
    /// the tolerant ratio test). Returns whether anything moved.
    fn flip_dual_infeasible(&mut self) -> bool {
        let mut moved = false;
        for j in 0..self.w {
            if self.state[j] == State::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let s = self.dual_feasible_state(j, CLEANUP_TOL);
            if s != self.state[j] {
                self.move_nonbasic(j, s);
                moved = true;
            }
        }
        moved
    }

    fn full_values(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.w).map(|j| self.nonbasic_value(j)).collect();
        for (i, &bv) in self.basis.iter().enumerate() {
            x[bv] = self.beta[i];
        }
        x
    }

    fn residual_ok(&self) -> bool {
        let (m, n) = (self.prob.m, self.prob.n);
        let x = self.full_values();
        (0..m).all(|i| {
            let row = &self.prob.a[i * n..(i + 1) * n];
            let mut s = x[n + i] - self.b[i];
            for j in 0..n {
                s += row[j] * x[j];
            }
            s.abs() <= RESIDUAL_TOL * self.prob.row_scale[i].max(self.b[i].abs())
        })
    }

    /// Re-derives row `r` of `B⁻¹` applied to the original data and checks
    /// that it cannot be satisfied within the variable bounds.
    fn certify_infeasible(&self, r: usize) -> bool {
        let (m, n, w) = (self.prob.m, self.prob.n, self.w);
        let y = &self.t[r * w + n..(r + 1) * w];
        let mut g = vec![0.0; n];
        let mut rhs = 0.0;
        for i in 0..m {
            if y[i] == 0.0 {
                continue;
            }
            rhs += y[i] * self.b[i];
            let row = &self.prob.a[i * n..(i + 1) * n];
            for j in 0..n {
                g[j] += y[i] * row[j];
            }
        }
        let (mut lo, mut hi, mut scale) = (0.0, 0.0, 1.0);
        for j in 0..w {
            let gj = if j < n { g[j] } else { y[j - n] };
            if gj == 0.0 {
                continue;
            }
            let (a, b) = (gj * self.lower[j], gj * self.upper[j]);
            lo += a.min(b);
            hi += a.max(b);
            scale += a.abs().max(b.abs());
        }
        let tol = FEAS_TOL * scale;
        rhs > hi + tol || rhs < lo - tol
    }

    /// Rebuilds the tableau from the original data for the current basis.
    fn refactor(&mut self) -> Result<()> {
        let (m, n, w) = (self.prob.m, self.prob.n, self.w);
        let col = |j: usize, i: usize| -> f64 {
            if j < n {
                self.prob.a[i * n + j]
            } else if j - n == i {
                1.0
            } else {
                0.0
            }
        };
        let bmat = Matrix::from_fn(m, m, |i, k| col(self.basis[k], i));
        let Some(binv) = bmat.lu().try_inverse() else {
            // Drift made the basis singular; start over from the identity basis.
            self.reset_basis();
            return Ok(());
        };
        let full = Matrix::from_fn(m, w, |i, j| col(j, i));
        let tm = &binv * &full;
        for i in 0..m {
            for j in 0..w {
                let v = tm[(i, j)];
                self.t[i * w + j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
        }
        for (k, &bv) in self.basis.iter().enumerate() {
            for i in 0..m {
                self.t[i * w + bv] = if i == k { 1.0 } else { 0.0 };
            }
        }
        let mut rhs = crate::linalg::Vector::from_column_slice(&self.b);
        for j in 0..w {
            if self.state[j] != State::Basic {
                let v = self.nonbasic_value(j);
                if v != 0.0 {
                    for i in 0..m {
                        rhs[i] -= col(j, i) * v;
                    }
                }
            }
        }
        let beta = &binv * rhs;
        self.beta.copy_from_slice(beta.as_slice());
        let cost = self.cost[..n].to_vec();
        self.set_cost(&cost);
        self.fresh = true;
        self.pivots = 0;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(a: &Matrix, b: &[f64], lo: &[f64], hi: &[f64], c: &[f64]) -> (LpStatus, Vec<f64>) {
        let mut s = DualSimplex::new(a, b, lo, hi, c);
        let st = s.solve().unwrap();
        (st, s.primal())
    }

    #[test]
    fn box_maximum() {
        let a = Matrix::zeros(0, 2);
        let (st, x) = solve(&a, &[], &[-1.0, -1.0], &[1.0, 1.0], &[1.0, -2.0]);
        assert_eq!(st, LpStatus::Optimal);
        assert_eq!(x, vec![1.0, -1.0]);
    }

    #[test]
    fn equality_constrained() {
        let a = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let (st, x) = solve(&a, &[1.0], &[-1.0, -1.0], &[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(st, LpStatus::Optimal);
        assert!((x[0] + x[1] - 1.0).abs() < 1e-12);
        let (st, x) = solve(&a, &[0.5], &[-1.0, -1.0], &[1.0, 1.0], &[2.0, 1.0]);
        assert_eq!(st, LpStatus::Optimal);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_row_sum() {
        let a = Matrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let (st, _) = solve(&a, &[5.0], &[-1.0; 3], &[1.0; 3], &[0.0; 3]);
        assert_eq!(st, LpStatus::Infeasible);
    }

    #[test]
    fn warm_start_after_bound_and_cost_change() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, 2.0, -1.0, 0.5, -1.0, 1.0]);
        let mut s = DualSimplex::new(&a, &[0.5, 0.2], &[-1.0; 3], &[1.0; 3], &[1.0, 0.0, 0.0]);
        assert_eq!(s.solve().unwrap(), LpStatus::Optimal);
        let v1 = s.objective();
        s.set_bounds(0, -1.0, 0.0);
        assert_eq!(s.solve().unwrap(), LpStatus::Optimal);
        assert!(s.objective() <= v1 + 1e-12);
        s.set_cost(&[0.0, 1.0, 1.0]);
        assert_eq!(s.solve().unwrap(), LpStatus::Optimal);
        let mut cold = DualSimplex::new(&a, &[0.5, 0.2], &[-1.0, -1.0, -1.0], &[0.0, 1.0, 1.0], &[0.0, 1.0, 1.0]);
        cold.solve().unwrap();
        assert!((cold.objective() - s.objective()).abs() < 1e-10);
        s.set_rhs(0, 10.0);
        assert_eq!(s.solve().unwrap(), LpStatus::Infeasible);
    }

    #[test]
    fn refactor_preserves_solution() {
        let a = Matrix::from_row_slice(2, 4, &[1.0, 2.0, -1.0, 0.3, 0.5, -1.0, 1.0, 2.0]);
        let mut s = DualSimplex::new(&a, &[0.5, 0.2], &[-1.0; 4], &[1.0; 4], &[1.0, 1.0, 0.0, -1.0]);
        s.solve().unwrap();
        let before = s.objective();
        s.refactor().unwrap();
        assert_eq!(s.solve().unwrap(), LpStatus::Optimal);
        assert!((s.objective() - before).abs() < 1e-12);
    }
}
