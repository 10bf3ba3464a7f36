//! Exact forward reachability of MLD systems on hybrid zonotopes.
//!
//! One step lifts `R_k` together with the inputs and auxiliaries into
//! `(x⁺, Ex x + Eu u + Ew w)`, intersects with each inequality row and
//! projects back onto `x⁺`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::mld::MldSystem;
use crate::optq::{SetSolver, SolverConfig};
use crate::reduce::{grow_tree_with, reduce_binary_factors, remove_redundant_among, ReductionReport};
use crate::setops::{halfspace_intersection, linear_map, minkowski_sum, Halfspace};
use crate::setrep::{HybridZonotope, IntegerFeasibleSet, SetDims, SlackTag};

/// Which slacks the per-step inequality removal tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SlackScan {
    /// Only the slacks created by the latest step.
    #[default]
    Newest,
    /// Every slack still present.
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachOptions {
    pub steps: usize,
    pub reduce_inequalities: bool,
    /// Implies tree tracking.
    pub reduce_binaries: bool,
    pub track_tree: bool,
    pub slack_scan: SlackScan,
    pub solver: SolverConfig,
    /// Axis-aligned state box `(lower, upper)` checked after every step.
    pub domain_box: Option<(Vec<f64>, Vec<f64>)>,
}

impl ReachOptions {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            reduce_inequalities: false,
            reduce_binaries: false,
            track_tree: false,
            slack_scan: SlackScan::default(),
            solver: SolverConfig::default(),
            domain_box: None,
        }
    }

    /// Inequality removal and binary reduction after every step.
    pub fn reduced(steps: usize) -> Self {
        Self { reduce_inequalities: true, reduce_binaries: true, track_tree: true, ..Self::new(steps) }
    }

    fn tracks_tree(&self) -> bool {
        self.track_tree || self.reduce_binaries
    }
}

/// Per-step record; step 0 describes the initial set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    /// Dimensions straight after the set recursion, before any reduction.
    pub raw_dims: SetDims,
    pub dims: SetDims,
    pub leaves: Option<usize>,
    pub removed_rows: usize,
    pub inequality_report: Option<ReductionReport>,
    pub binary_report: Option<ReductionReport>,
    pub domain_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachResult {
    pub sets: Vec<HybridZonotope>,
    pub trees: Option<Vec<IntegerFeasibleSet>>,
    pub steps: Vec<StepRecord>,
    /// Wall-clock seconds per step (index 0 covers the initial set).
    pub timings: Vec<f64>,
    /// Set when some step left the state box, so later sets may miss states.
    pub possibly_inner: bool,
}

impl ReachResult {
    pub fn dims(&self) -> Vec<SetDims> {
        self.sets.iter().map(HybridZonotope::dims).collect()
    }

    pub fn final_set(&self) -> &HybridZonotope {
        self.sets.last().expect("a result always holds the initial set")
    }

    pub fn total_removed_rows(&self) -> usize {
        self.steps.iter().map(|s| s.removed_rows).sum()
    }

    /// Per-step metadata as JSON (timings excluded).
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            possibly_inner: bool,
            steps: &'a [StepRecord],
        }
        serde_json::to_string_pretty(&Out { possibly_inner: self.possibly_inner, steps: &self.steps })
            .expect("step records serialize")
    }
}

/// What a reduction did, handed to observers together with both sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    Inequalities,
    Binaries,
}

pub struct ReductionEvent<'a> {
    pub k: usize,
    pub kind: ReductionKind,
    pub before: &'a HybridZonotope,
    pub after: &'a HybridZonotope,
    pub tree_before: Option<&'a IntegerFeasibleSet>,
    pub tree_after: Option<&'a IntegerFeasibleSet>,
}

fn check_model(rk: &HybridZonotope, m: &MldSystem, u: &HybridZonotope, w: &HybridZonotope) -> Result<()> {
    m.check()?;
    let d = &m.dims;
    if rk.dim() != d.n() || u.dim() != d.n_u() || w.dim() != d.n_r() {
        return Err(Error::Dimension(format!(
            "sets of dimension ({}, {}, {}) for a model with (n, n_u, n_r) = ({}, {}, {})",
            rk.dim(),
            u.dim(),
            w.dim(),
            d.n(),
            d.n_u(),
            d.n_r()
        )));
    }
    Ok(())
}

/// Lifts the step's inputs and auxiliaries: `[Bu; Eu] U ⊕ [Bw; Ew] W ⊕ {[Baff; 0]}`.
fn lifted_inputs(m: &MldSystem, u: &HybridZonotope, w: &HybridZonotope) -> Result<HybridZonotope> {
    let ne = m.dims.n_e();
    let bu = linalg::vstack(m.dims.n_u(), &[&m.bu, &m.eu]);
    let bw = linalg::vstack(m.dims.n_r(), &[&m.bw, &m.ew]);
    let offset = linalg::vcat(&[&m.baff, &Vector::zeros(ne)]);
    let v = minkowski_sum(&linear_map(&bu, u)?, &linear_map(&bw, w)?)?;
    minkowski_sum(&v, &HybridZonotope::point(offset.as_slice())?)
}

/// The set of states reachable in one step from `rk`.
pub fn reach_step(rk: &HybridZonotope, m: &MldSystem, u: &HybridZonotope, w: &HybridZonotope) -> Result<HybridZonotope> {
    check_model(rk, m, u, w)?;
    let v = lifted_inputs(m, u, w)?;
    reach_step_lifted(rk, m, &v)
}

fn reach_step_lifted(rk: &HybridZonotope, m: &MldSystem, v: &HybridZonotope) -> Result<HybridZonotope> {
    let (n, ne) = (m.dims.n(), m.dims.n_e());
    let ax = linalg::vstack(n, &[&m.a, &m.ex]);
    let mut lifted = minkowski_sum(&linear_map(&ax, rk)?, v)?;
    let mut select = Matrix::zeros(ne, n + ne);
    for i in 0..ne {
        select[(i, n + i)] = 1.0;
    }
    for i in 0..ne {
        let mut e = Vector::zeros(ne);
        e[i] = 1.0;
        lifted = halfspace_intersection(&lifted, &Halfspace::new(e, m.eaff[i])?, &select)?;
    }
    let mut project = Matrix::zeros(n, n + ne);
    for i in 0..n {
        project[(i, i)] = 1.0;
    }
    linear_map(&project, &lifted)
}

/// Representation size after `k` steps from a set of size `r0`.
pub fn predicted_dims(k: usize, m: &MldSystem, u: &HybridZonotope, r0: SetDims) -> SetDims {
    let d = &m.dims;
    let (nrc, nrl, ne) = (d.n_rc.max(0) as usize, d.n_rl.max(0) as usize, d.n_e());
    SetDims::new(
        (u.n_g() + nrc + ne) * k + r0.n_g,
        (u.n_b() + nrl) * k + r0.n_b,
        (u.n_c() + ne) * k + r0.n_c,
    )
}

/// Whether the set lies in the box: `±support(±e_i)` within the bounds up to `1e-8`.
pub fn domain_check(rk: &HybridZonotope, lower: &[f64], upper: &[f64]) -> Result<bool> {
    domain_check_with(rk, lower, upper, SetSolver::new(rk))
}

fn domain_check_with(rk: &HybridZonotope, lower: &[f64], upper: &[f64], solver: SetSolver<'_>) -> Result<bool> {
    let n = rk.dim();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Dimension(format!("box of dimension {} for a set of dimension {n}", lower.len())));
    }
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        if solver.support(&e)?.value > upper[i] + 1e-8 {
            return Ok(false);
        }
        e[i] = -1.0;
        if -solver.support(&e)?.value < lower[i] - 1e-8 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs `opts.steps` steps from `r0`.
pub fn reach(
    r0: &HybridZonotope,
    m: &MldSystem,
    u: &HybridZonotope,
    w: &HybridZonotope,
    opts: &ReachOptions,
) -> Result<ReachResult> {
    reach_observed(r0, m, u, w, opts, |_| Ok(()))
}

/// Like [`reach`], calling `observer` after every reduction with the sets before and after it.
pub fn reach_observed(
    r0: &HybridZonotope,
    m: &MldSystem,
    u: &HybridZonotope,
    w: &HybridZonotope,
    opts: &ReachOptions,
    mut observer: impl FnMut(&ReductionEvent<'_>) -> Result<()>,
) -> Result<ReachResult> {
    check_model(r0, m, u, w)?;
    let v = lifted_inputs(m, u, w)?;
    let tracks = opts.tracks_tree();
    let cfg = opts.solver;

    let start = Instant::now();
    let mut trees: Option<Vec<IntegerFeasibleSet>> = None;
    let mut current = r0.clone();
    let mut tree = if tracks { Some(SetSolver::with_config(r0, cfg).enumerate()?) } else { None };
    let mut rec0 = StepRecord {
        k: 0,
        raw_dims: r0.dims(),
        dims: r0.dims(),
        leaves: tree.as_ref().map(IntegerFeasibleSet::len),
        removed_rows: 0,
        inequality_report: None,
        binary_report: None,
        domain_ok: None,
    };
    if opts.reduce_binaries {
        let t = tree.take().expect("tracked");
        let (r, tr, rep) = reduce_binary_factors(&current, &t)?;
        observer(&ReductionEvent {
            k: 0,
            kind: ReductionKind::Binaries,
            before: &current,
            after: &r,
            tree_before: Some(&t),
            tree_after: Some(&tr),
        })?;
        current = r;
        tree = Some(tr);
        rec0.binary_report = Some(rep);
        rec0.dims = current.dims();
    }
    let mut possibly_inner = false;
    if let Some((lo, hi)) = &opts.domain_box {
        let ok = domain_check_with(&current, lo, hi, solver_for(&current, tree.as_ref(), cfg)?)?;
        rec0.domain_ok = Some(ok);
        possibly_inner |= !ok;
    }
    if let Some(t) = &tree {
        trees = Some(vec![t.clone()]);
    }
    let mut sets = vec![current.clone()];
    let mut steps = vec![rec0];
    let mut timings = vec![start.elapsed().as_secs_f64()];

    for k in 1..=opts.steps {
        let start = Instant::now();
        let prev_ng = current.n_g();
        let mut next = reach_step_lifted(&current, m, &v)?;
        let mut rec = StepRecord {
            k,
            raw_dims: next.dims(),
            dims: next.dims(),
            leaves: None,
            removed_rows: 0,
            inequality_report: None,
            binary_report: None,
            domain_ok: None,
        };
        if let Some(t) = tree.take() {
            let mut t_next = grow_tree_with(&next, &t, cfg)?;
            if opts.reduce_binaries {
                let (r, tr, rep) = reduce_binary_factors(&next, &t_next)?;
                observer(&ReductionEvent {
                    k,
                    kind: ReductionKind::Binaries,
                    before: &next,
                    after: &r,
                    tree_before: Some(&t_next),
                    tree_after: Some(&tr),
                })?;
                next = r;
                t_next = tr;
                rec.binary_report = Some(rep);
            }
            rec.leaves = Some(t_next.len());
            tree = Some(t_next);
        }
        // Binary reduction first: tying the binaries to the tree lets the
        // redundancy test see which mode combinations are reachable.
        if opts.reduce_inequalities {
            let first_new = prev_ng + v.n_g();
            let candidates: Vec<SlackTag> = next
                .slack_tags()
                .iter()
                .copied()
                .filter(|t| opts.slack_scan == SlackScan::All || t.column >= first_new)
                .collect();
            let (r, rep) = remove_redundant_among(&next, &candidates, cfg)?;
            observer(&ReductionEvent {
                k,
                kind: ReductionKind::Inequalities,
                before: &next,
                after: &r,
                tree_before: tree.as_ref(),
                tree_after: tree.as_ref(),
            })?;
            rec.removed_rows = rep.removed_constraint_rows.len();
            rec.inequality_report = Some(rep);
            next = r;
        }
        if let Some((lo, hi)) = &opts.domain_box {
            let ok = domain_check_with(&next, lo, hi, solver_for(&next, tree.as_ref(), cfg)?)?;
            rec.domain_ok = Some(ok);
            possibly_inner |= !ok;
        }
        rec.dims = next.dims();
        if let (Some(ts), Some(t)) = (trees.as_mut(), tree.as_ref()) {
            ts.push(t.clone());
        }
        current = next;
        sets.push(current.clone());
        steps.push(rec);
        timings.push(start.elapsed().as_secs_f64());
    }
    Ok(ReachResult { sets, trees, steps, timings, possibly_inner })
}

fn solver_for<'a>(
    z: &'a HybridZonotope,
    tree: Option<&IntegerFeasibleSet>,
    cfg: SolverConfig,
) -> Result<SetSolver<'a>> {
    let s = SetSolver::with_config(z, cfg);
    match tree {
        Some(t) => s.with_leaves(t),
        None => Ok(s),
    }
}
