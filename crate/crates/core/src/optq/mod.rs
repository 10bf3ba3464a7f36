//! LP and MILP engine and the set queries built on it: emptiness, point
//! containment, support functions, halfspace tests and enumeration of the
//! integer-feasible set.
//!
//! All decision variables of the queries are factors bounded in `[-1, 1]`,
//! binary factors restricted to `{-1, +1}` by branch and bound.

mod milp;
mod query;
pub(crate) mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::setrep::BinaryAssignment;

pub use milp::BuiltinMilp;
pub use query::{
    contains_point, enumerate_integer_feasible, intersects_halfspace, is_empty, support, LeafPointOracle,
    SetSolver, Support,
};

/// Environment variable overriding the default branch-and-bound node budget.
pub const NODE_BUDGET_ENV: &str = "HYBZONO_NODE_BUDGET";

const DEFAULT_NODE_BUDGET: usize = 5_000_000;

/// Solver settings shared by all queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub node_budget: usize,
}

impl SolverConfig {
    pub fn with_node_budget(node_budget: usize) -> Self {
        Self { node_budget }
    }
}

impl Default for SolverConfig {
    /// Reads the node budget from [`NODE_BUDGET_ENV`] when set to a positive integer.
    fn default() -> Self {
        let node_budget = std::env::var(NODE_BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|v| *v > 0)
            .unwrap_or(DEFAULT_NODE_BUDGET);
        Self { node_budget }
    }
}

/// Maximize `objectiveᵀx` subject to `eq_a x = eq_b` and `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vector,
    eq_a: Matrix,
    eq_b: Vector,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vector, eq_a: Matrix, eq_b: Vector, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = objective.len();
        if eq_a.ncols() != n || lower.len() != n || upper.len() != n {
            return Err(Error::Dimension(format!(
                "linear program with {n} variables has a {}x{} constraint matrix and {}/{} bounds",
                eq_a.nrows(),
                eq_a.ncols(),
                lower.len(),
                upper.len()
            )));
        }
        if eq_a.nrows() != eq_b.len() {
            return Err(Error::Dimension(format!(
                "constraint matrix has {} rows, right-hand side has {}",
                eq_a.nrows(),
                eq_b.len()
            )));
        }
        if !linalg::is_finite_vector(&objective) || !linalg::is_finite_matrix(&eq_a) || !linalg::is_finite_vector(&eq_b) {
            return Err(Error::NonFinite("linear program data".into()));
        }
        for j in 0..n {
            if !lower[j].is_finite() || !upper[j].is_finite() {
                return Err(Error::NonFinite(format!("bounds of variable {j}")));
            }
            if lower[j] > upper[j] {
                return Err(Error::InvalidArgument(format!(
                    "variable {j} has lower bound {} above upper bound {}",
                    lower[j], upper[j]
                )));
            }
        }
        Ok(Self { objective, eq_a, eq_b, lower, upper })
    }

    /// All variables in the unit box `[-1, 1]`.
    pub fn in_unit_box(objective: Vector, eq_a: Matrix, eq_b: Vector) -> Result<Self> {
        let n = objective.len();
        Self::new(objective, eq_a, eq_b, vec![-1.0; n], vec![1.0; n])
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
    pub fn objective(&self) -> &Vector {
        &self.objective
    }
    pub fn eq_a(&self) -> &Matrix {
        &self.eq_a
    }
    pub fn eq_b(&self) -> &Vector {
        &self.eq_b
    }
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub(crate) fn simplex(&self) -> simplex::DualSimplex {
        simplex::DualSimplex::new(
            &self.eq_a,
            self.eq_b.as_slice(),
            &self.lower,
            &self.upper,
            self.objective.as_slice(),
        )
    }

    /// Largest violation of the constraints and bounds at `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let xv = Vector::from_column_slice(x);
        let eq = (&self.eq_a * &xv - &self.eq_b).amax();
        let bnd = (0..x.len())
            .map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0))
            .fold(0.0, f64::max);
        eq.max(bnd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    Optimal,
    /// Never produced by the built-in engine, whose variables are all bounded.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub witness: Option<Vec<f64>>,
    pub value: Option<f64>,
    pub nodes_explored: usize,
}

impl SolveOutcome {
    pub fn infeasible(nodes_explored: usize) -> Self {
        Self { status: SolveStatus::Infeasible, witness: None, value: None, nodes_explored }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self.status, SolveStatus::Feasible | SolveStatus::Optimal)
    }
}

/// Solves the LP relaxation exactly (no integrality).
pub fn lp_solve(lp: &LinearProgram) -> Result<SolveOutcome> {
    let mut sx = lp.simplex();
    match sx.solve()? {
        simplex::LpStatus::Infeasible => Ok(SolveOutcome::infeasible(1)),
        simplex::LpStatus::Optimal => Ok(SolveOutcome {
            status: SolveStatus::Optimal,
            value: Some(sx.objective()),
            witness: Some(sx.primal()),
            nodes_explored: 1,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MilpMode {
    /// Stop at the first integer-feasible point.
    Feasibility,
    /// Prove a global maximum.
    Maximize,
}

/// A mixed-integer program whose `binary_vars` take values in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpQuery {
    pub base: LinearProgram,
    pub binary_vars: Vec<usize>,
    pub mode: MilpMode,
    pub enumerate_all: bool,
    /// Restricts the first `hint.n_b()` binary variables to the listed
    /// assignments. Only valid when the caller knows every other assignment is
    /// infeasible.
    pub prefix_hint: Option<crate::setrep::IntegerFeasibleSet>,
}

impl MilpQuery {
    pub fn new(base: LinearProgram, binary_vars: Vec<usize>, mode: MilpMode) -> Result<Self> {
        let n = base.num_vars();
        let mut seen = vec![false; n];
        for &v in &binary_vars {
            if v >= n {
                return Err(Error::InvalidArgument(format!("binary index {v} outside {n} variables")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidArgument(format!("binary index {v} listed twice")));
            }
            if base.lower[v] > -1.0 || base.upper[v] < 1.0 {
                return Err(Error::InvalidArgument(format!("binary variable {v} must have bounds [-1, 1]")));
            }
        }
        Ok(Self { base, binary_vars, mode, enumerate_all: false, prefix_hint: None })
    }

    pub fn enumerating(mut self) -> Self {
        self.enumerate_all = true;
        self
    }

    pub fn with_prefix_hint(mut self, hint: crate::setrep::IntegerFeasibleSet) -> Result<Self> {
        if hint.n_b() > self.binary_vars.len() {
            return Err(Error::Dimension(format!(
                "hint fixes {} binaries, query has {}",
                hint.n_b(),
                self.binary_vars.len()
            )));
        }
        self.prefix_hint = Some(hint);
        Ok(self)
    }
}

/// Every binary assignment with a feasible LP, sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub assignments: Vec<BinaryAssignment>,
    pub nodes_explored: usize,
}

/// Seam for replacing the built-in branch and bound with another MILP engine.
pub trait MilpBackend {
    fn solve(&self, q: &MilpQuery) -> Result<SolveOutcome>;
    fn enumerate(&self, q: &MilpQuery) -> Result<Enumeration>;
}

/// Solves with the built-in engine and the default configuration.
pub fn milp_solve(q: &MilpQuery) -> Result<SolveOutcome> {
    BuiltinMilp::default().solve(q)
}

/// Enumerates with the built-in engine and the default configuration.
pub fn milp_enumerate(q: &MilpQuery) -> Result<Enumeration> {
    BuiltinMilp::default().enumerate(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximize_on_interval() {
        let lp = LinearProgram::in_unit_box(Vector::from_element(1, 1.0), Matrix::zeros(0, 1), Vector::zeros(0)).unwrap();
        let out = lp_solve(&lp).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.value.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximize_with_equality() {
        let lp = LinearProgram::in_unit_box(
            Vector::from_element(2, 1.0),
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            Vector::from_element(1, 1.0),
        )
        .unwrap();
        let out = lp_solve(&lp).unwrap();
        assert!((out.value.unwrap() - 1.0).abs() < 1e-12);
        assert!(lp.violation(out.witness.as_ref().unwrap()) < 1e-8);
    }

    #[test]
    fn phase_one_infeasible() {
        let lp = LinearProgram::in_unit_box(
            Vector::zeros(3),
            Matrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
            Vector::from_element(1, 5.0),
        )
        .unwrap();
        let out = lp_solve(&lp).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert!(out.witness.is_none());
    }

    #[test]
    fn malformed_programs_are_rejected() {
        assert!(LinearProgram::new(Vector::zeros(1), Matrix::zeros(0, 1), Vector::zeros(0), vec![1.0], vec![0.0]).is_err());
        assert!(LinearProgram::new(Vector::zeros(2), Matrix::zeros(0, 1), Vector::zeros(0), vec![0.0; 2], vec![0.0; 2]).is_err());
        let lp = LinearProgram::in_unit_box(Vector::zeros(1), Matrix::zeros(0, 1), Vector::zeros(0)).unwrap();
        assert!(MilpQuery::new(lp.clone(), vec![1], MilpMode::Feasibility).is_err());
        assert!(MilpQuery::new(lp, vec![0, 0], MilpMode::Feasibility).is_err());
    }

    #[test]
    fn node_budget_from_environment() {
        // Only checks the parser path; the variable is not set in tests.
        let cfg = SolverConfig::with_node_budget(7);
        assert_eq!(cfg.node_budget, 7);
        assert!(SolverConfig::default().node_budget > 0);
    }
}
