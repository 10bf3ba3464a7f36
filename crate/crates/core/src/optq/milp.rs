//! Depth-first branch and bound over `{-1, +1}` variables.
//!
//! Children are warm-started from their parent's tableau. The branching
//! variable is the lowest-index unfixed binary (the lowest-index fractional
//! one when stopping at the first integer point), and the `-1` child is
//! explored before the `+1` child, so results are reproducible.

use super::simplex::{DualSimplex, LpStatus};
use super::{Enumeration, MilpBackend, MilpMode, MilpQuery, SolveOutcome, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::setrep::{BinaryAssignment, IntegerFeasibleSet};

const INTEGRALITY_TOL: f64 = 1e-9;

/// The reference engine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuiltinMilp {
    pub config: SolverConfig,
}

impl BuiltinMilp {
    pub fn new(config: SolverConfig) -> Self {
        Self { config }
    }
}

impl MilpBackend for BuiltinMilp {
    fn solve(&self, q: &MilpQuery) -> Result<SolveOutcome> {
        let mut root = q.base.simplex();
        let goal = if q.enumerate_all { Goal::Enumerate } else { q.mode.into() };
        let mut search = Search::new(&q.binary_vars, q.prefix_hint.as_ref(), goal, self.config.node_budget);
        search.run(&mut root)?;
        Ok(search.outcome(&q.base))
    }

    fn enumerate(&self, q: &MilpQuery) -> Result<Enumeration> {
        let mut root = q.base.simplex();
        enumerate_from(&mut root, &q.binary_vars, q.prefix_hint.as_ref(), self.config.node_budget)
    }
}

pub(crate) fn enumerate_from(
    root: &mut DualSimplex,
    binary_vars: &[usize],
    hint: Option<&IntegerFeasibleSet>,
    node_budget: usize,
) -> Result<Enumeration> {
    let mut search = Search::new(binary_vars, hint, Goal::Enumerate, node_budget);
    search.run(root)?;
    let mut assignments = std::mem::take(&mut search.found);
    assignments.sort();
    Ok(Enumeration { assignments, nodes_explored: search.nodes })
}

/// Runs a feasibility or maximization search from a prepared root tableau.
pub(crate) fn optimize_from(
    root: &mut DualSimplex,
    binary_vars: &[usize],
    hint: Option<&IntegerFeasibleSet>,
    mode: MilpMode,
    node_budget: usize,
) -> Result<(Option<(f64, Vec<f64>)>, usize)> {
    let mut search = Search::new(binary_vars, hint, mode.into(), node_budget);
    search.run(root)?;
    Ok((search.best.take(), search.nodes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Goal {
    First,
    Maximize,
    Enumerate,
}

impl From<MilpMode> for Goal {
    fn from(m: MilpMode) -> Self {
        match m {
            MilpMode::Feasibility => Goal::First,
            MilpMode::Maximize => Goal::Maximize,
        }
    }
}

struct Search<'a> {
    bins: &'a [usize],
    hint: Option<&'a [BinaryAssignment]>,
    hint_depth: usize,
    goal: Goal,
    budget: usize,
    nodes: usize,
    fixed: Vec<Option<i8>>,
    found: Vec<BinaryAssignment>,
    best: Option<(f64, Vec<f64>)>,
    stop: bool,
}

impl<'a> Search<'a> {
    fn new(bins: &'a [usize], hint: Option<&'a IntegerFeasibleSet>, goal: Goal, budget: usize) -> Self {
        Self {
            bins,
            hint: hint.map(|h| h.entries()),
            hint_depth: hint.map_or(0, |h| h.n_b()),
            goal,
            budget,
            nodes: 0,
            fixed: vec![None; bins.len()],
            found: Vec::new(),
            best: None,
            stop: false,
        }
    }

    fn run(&mut self, root: &mut DualSimplex) -> Result<()> {
        let range = (0, self.hint.map_or(0, |h| h.len()));
        if self.hint.is_some() && range.1 == 0 {
            return Ok(());
        }
        self.node(root, 0, range)
    }

    fn outcome(&mut self, base: &super::LinearProgram) -> SolveOutcome {
        match (self.goal, self.best.take()) {
            (Goal::Maximize, Some((v, x))) => SolveOutcome {
                status: SolveStatus::Optimal,
                witness: Some(x),
                value: Some(v),
                nodes_explored: self.nodes,
            },
            (Goal::First, Some((_, x))) => SolveOutcome {
                status: SolveStatus::Feasible,
                value: Some(x.iter().zip(base.objective().iter()).map(|(a, b)| a * b).sum()),
                witness: Some(x),
                nodes_explored: self.nodes,
            },
            (Goal::Enumerate, _) if !self.found.is_empty() => {
                self.found.sort();
                let first = &self.found[0];
                let mut lp = base.simplex();
                for (k, &v) in self.bins.iter().enumerate() {
                    let val = first.as_slice()[k] as f64;
                    lp.set_bounds(v, val, val);
                }
                let x = match lp.solve() {
                    Ok(LpStatus::Optimal) => Some(lp.primal()),
                    _ => None,
                };
                SolveOutcome { status: SolveStatus::Feasible, witness: x, value: None, nodes_explored: self.nodes }
            }
            _ => SolveOutcome::infeasible(self.nodes),
        }
    }

    /// Position (in `bins`) to branch on, or `None` at an integer-feasible node.
    fn pick(&self, x: &[f64], depth: usize) -> Option<usize> {
        if self.goal == Goal::Enumerate {
            return (depth < self.bins.len()).then_some(depth);
        }
        let fractional = |k: usize| {
            self.fixed[k].is_none() && (x[self.bins[k]].abs() - 1.0).abs() > INTEGRALITY_TOL
        };
        let any_fractional = (0..self.bins.len()).find(|&k| fractional(k));
        any_fractional?;
        if depth < self.hint_depth {
            return Some(depth);
        }
        any_fractional
    }

    fn node(&mut self, sx: &mut DualSimplex, depth: usize, range: (usize, usize)) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExhausted { budget: self.budget });
        }
        if sx.solve()? == LpStatus::Infeasible {
            return Ok(());
        }
        let x = sx.primal();
        if self.goal == Goal::Maximize {
            if let Some((best, _)) = &self.best {
                if sx.objective() <= best + 1e-12 * (1.0 + best.abs()) {
                    return Ok(());
                }
            }
        }
        let Some(k) = self.pick(&x, depth) else {
            self.record(sx, x);
            return Ok(());
        };
        let in_order = k == depth && depth < self.hint_depth;
        let children: Vec<(i8, (usize, usize))> = if in_order {
            let h = self.hint.expect("hint depth implies hint");
            let split = range.0 + h[range.0..range.1].partition_point(|e| e.as_slice()[depth] < 0);
            [(-1, (range.0, split)), (1, (split, range.1))]
                .into_iter()
                .filter(|(_, r)| r.0 < r.1)
                .collect()
        } else {
            vec![(-1, range), (1, range)]
        };
        let next_depth = if k == depth { depth + 1 } else { depth };
        let last = children.len().saturating_sub(1);
        for (idx, (v, sub)) in children.into_iter().enumerate() {
            let val = v as f64;
            self.fixed[k] = Some(v);
            if idx == last {
                sx.set_bounds(self.bins[k], val, val);
                self.node(sx, next_depth, sub)?;
            } else {
                let mut child = sx.clone();
                child.set_bounds(self.bins[k], val, val);
                self.node(&mut child, next_depth, sub)?;
            }
            self.fixed[k] = None;
            if self.stop {
                break;
            }
        }
        Ok(())
    }

    fn record(&mut self, sx: &DualSimplex, mut x: Vec<f64>) {
        for &b in self.bins {
            x[b] = if x[b] < 0.0 { -1.0 } else { 1.0 };
        }
        match self.goal {
            Goal::Enumerate => {
                let a = self.bins.iter().map(|&b| x[b] as i8).collect();
                self.found.push(BinaryAssignment::new(a).expect("snapped values are ±1"));
            }
            Goal::First => {
                self.best = Some((0.0, x));
                self.stop = true;
            }
            Goal::Maximize => {
                let v = sx.objective();
                if self.best.as_ref().is_none_or(|(b, _)| v > *b) {
                    self.best = Some((v, x));
                }
            }
        }
    }
}
