//! Representation-complexity reduction: removal of redundant halfspace
//! constraints, incremental growth of the integer-feasible set, and
//! elimination of linearly dependent binary factors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::optq::{BuiltinMilp, LinearProgram, MilpBackend, MilpMode, MilpQuery, SetSolver, SolverConfig};
use crate::setrep::{BinaryAssignment, HybridZonotope, IntegerFeasibleSet, SetDims, SlackTag};

/// Affine substitution `ξb = M ξb' + m` applied to the binary factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMap {
    /// Row-major `n_b x n_b'`.
    pub m: Vec<Vec<f64>>,
    pub shift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub removed_constraint_rows: Vec<usize>,
    pub removed_generator_columns: Vec<usize>,
    pub binary_map: Option<BinaryMap>,
    pub before: SetDims,
    pub after: SetDims,
}

impl ReductionReport {
    fn unchanged(d: SetDims) -> Self {
        Self {
            removed_constraint_rows: Vec::new(),
            removed_generator_columns: Vec::new(),
            binary_map: None,
            before: d,
            after: d,
        }
    }
}

/// Whether the halfspace constraint behind `tag` can be dropped without
/// changing the set.
///
/// The tagged row reads `a ξ + s ξ_h = β` with `s > 0`, i.e. `a ξ ∈ [β − s, β + s]`,
/// and the lower end holds for every point of the set by construction of the
/// slack coefficient. The row is redundant when no point of the set without
/// it reaches the upper end, i.e. when `a ξ − t = β + s` with `t ≥ 0` is
/// infeasible for the other constraints.
pub fn is_redundant_slack(z: &HybridZonotope, tag: SlackTag, config: SolverConfig) -> Result<bool> {
    let (ng, nb, nc) = (z.n_g(), z.n_b(), z.n_c());
    if tag.column >= ng || tag.row >= nc {
        return Err(Error::InvalidArgument(format!(
            "slack tag (column {}, row {}) outside the set",
            tag.column, tag.row
        )));
    }
    let s = z.ac()[(tag.row, tag.column)];
    if !(s > 0.0) {
        return Ok(false);
    }
    if (0..nc).any(|i| i != tag.row && z.ac()[(i, tag.column)] != 0.0) {
        return Ok(false);
    }
    let mut a = linalg::hstack(nc, &[z.ac(), z.ab()]);
    a[(tag.row, tag.column)] = -1.0;
    let mut b = z.b().clone();
    b[tag.row] += s;
    let t_max = a.row(tag.row).iter().map(|v| v.abs()).sum::<f64>() + b[tag.row].abs() + 1.0;
    let mut lower = vec![-1.0; ng + nb];
    let mut upper = vec![1.0; ng + nb];
    lower[tag.column] = 0.0;
    upper[tag.column] = t_max;
    let lp = LinearProgram::new(Vector::zeros(ng + nb), a, b, lower, upper)?;
    let q = MilpQuery::new(lp, (ng..ng + nb).collect(), MilpMode::Feasibility)?;
    Ok(!BuiltinMilp::new(config).solve(&q)?.is_feasible())
}

/// Tests every slack of the set in ascending creation order.
pub fn remove_redundant_inequalities(z: &HybridZonotope) -> Result<(HybridZonotope, ReductionReport)> {
    let tags = z.slack_tags().to_vec();
    remove_redundant_among(z, &tags, SolverConfig::default())
}

/// Tests the given slacks in the given order. Each test runs against the set
/// left by the previous removals, so every removal preserves the set even
/// when two constraints imply each other.
pub fn remove_redundant_among(
    z: &HybridZonotope,
    candidates: &[SlackTag],
    config: SolverConfig,
) -> Result<(HybridZonotope, ReductionReport)> {
    let before = z.dims();
    let mut current = z.clone();
    let mut removed: Vec<SlackTag> = Vec::new();
    for &orig in candidates {
        if !z.slack_tags().contains(&orig) {
            return Err(Error::InvalidArgument(format!(
                "(column {}, row {}) is not a slack of the set",
                orig.column, orig.row
            )));
        }
        let tag = SlackTag {
            column: orig.column - removed.iter().filter(|r| r.column < orig.column).count(),
            row: orig.row - removed.iter().filter(|r| r.row < orig.row).count(),
        };
        if is_redundant_slack(&current, tag, config)? {
            current = current.without(&[tag.column], &[tag.row]);
            removed.push(orig);
        }
    }
    let mut rows: Vec<usize> = removed.iter().map(|t| t.row).collect();
    let mut cols: Vec<usize> = removed.iter().map(|t| t.column).collect();
    rows.sort_unstable();
    cols.sort_unstable();
    let after = current.dims();
    Ok((
        current,
        ReductionReport {
            removed_constraint_rows: rows,
            removed_generator_columns: cols,
            binary_map: None,
            before,
            after,
        },
    ))
}

/// Integer-feasible set of `z2`, whose first `t1.n_b()` binary factors are
/// those of a set with integer-feasible set `t1`: each leaf of `t1` is
/// branched on the new factors only.
pub fn grow_tree(z2: &HybridZonotope, t1: &IntegerFeasibleSet) -> Result<IntegerFeasibleSet> {
    grow_tree_with(z2, t1, SolverConfig::default())
}

pub fn grow_tree_with(z2: &HybridZonotope, t1: &IntegerFeasibleSet, config: SolverConfig) -> Result<IntegerFeasibleSet> {
    if t1.n_b() > z2.n_b() {
        return Err(Error::Ordering(format!(
            "previous tree has {} layers but the set has only {} binary factors",
            t1.n_b(),
            z2.n_b()
        )));
    }
    SetSolver::with_config(z2, config).with_leaves(t1)?.enumerate()
}

const RANK_TOL: f64 = 1e-9;
const AMBIGUITY_TOL: f64 = 1e-9;
const MAP_RESIDUAL_TOL: f64 = 1e-10;

fn numerical_rank(t: &Matrix) -> Result<usize> {
    if t.is_empty() {
        return Ok(0);
    }
    let sv = t.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return Ok(0);
    }
    let threshold = RANK_TOL * smax;
    if let Some(&value) = sv.iter().find(|s| **s != 0.0 && (**s - threshold).abs() <= AMBIGUITY_TOL) {
        return Err(Error::AmbiguousRank { value, threshold });
    }
    Ok(sv.iter().filter(|s| **s > threshold).count())
}

/// Selects `k` linearly independent columns of `a` by Householder QR with
/// column pivoting, optionally forcing `first` as the initial pivot.
fn pivoted_columns(a: &Matrix, k: usize, first: Option<usize>) -> Vec<usize> {
    let (rows, cols) = a.shape();
    let mut r = a.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    for step in 0..k.min(rows).min(cols) {
        let p = match (step, first) {
            (0, Some(f)) => f,
            _ => (step..cols)
                .max_by(|&i, &j| {
                    let ni = r.view((step, i), (rows - step, 1)).norm_squared();
                    let nj = r.view((step, j), (rows - step, 1)).norm_squared();
                    ni.partial_cmp(&nj).unwrap().then(j.cmp(&i))
                })
                .expect("nonempty range"),
        };
        r.swap_columns(step, p);
        perm.swap(step, p);
        let x = r.view((step, step), (rows - step, 1)).clone_owned();
        let alpha = if x[0] >= 0.0 { -x.norm() } else { x.norm() };
        let mut v = x.clone();
        v[0] -= alpha;
        let vn = v.norm_squared();
        if vn > 0.0 {
            let mut sub = r.view_mut((step, step), (rows - step, cols - step));
            let proj = v.transpose() * &sub * (2.0 / vn);
            sub -= &v * proj;
        }
    }
    perm.truncate(k);
    perm
}

/// Removes linearly dependent binary factors, and a binary factor that is
/// constant over all leaves, repeating until neither applies. `t` must be the
/// complete integer-feasible set of `z`; the number of leaves is unchanged.
pub fn reduce_binary_factors(
    z: &HybridZonotope,
    t: &IntegerFeasibleSet,
) -> Result<(HybridZonotope, IntegerFeasibleSet, ReductionReport)> {
    if t.n_b() != z.n_b() {
        return Err(Error::Dimension(format!(
            "integer-feasible set has {} factors, set has {}",
            t.n_b(),
            z.n_b()
        )));
    }
    let before = z.dims();
    if t.is_empty() || z.n_b() == 0 {
        return Ok((z.clone(), t.clone(), ReductionReport::unchanged(before)));
    }
    let mut cur = z.clone();
    let mut cur_t = t.clone();
    let mut total_m = Matrix::identity(z.n_b(), z.n_b());
    let mut total_shift = Vector::zeros(z.n_b());
    let mut changed = false;
    loop {
        let nb = cur.n_b();
        if nb == 0 {
            break;
        }
        let tm = cur_t.to_matrix();
        let rank = numerical_rank(&tm)?;
        let constant = (0..nb).find(|&i| tm.row(i).iter().all(|v| *v == tm[(i, 0)]));
        if rank == nb && constant.is_none() {
            break;
        }
        let mut phi = pivoted_columns(&tm.transpose(), rank, constant);
        let head = constant.filter(|c| phi.contains(c));
        phi.sort_unstable();
        if let Some(c) = head {
            phi.retain(|&i| i != c);
            phi.insert(0, c);
        }
        let t_phi = linalg::select_rows(&tm, &phi);
        let gram = &t_phi * t_phi.transpose();
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| Error::NumericalBreakdown("selected binary rows are not independent".into()))?;
        let m1 = &tm * t_phi.transpose() * gram_inv;
        let residual = (&m1 * &t_phi - &tm).amax();
        if residual > MAP_RESIDUAL_TOL {
            return Err(Error::NumericalBreakdown(format!("binary factor map residual {residual:e}")));
        }
        let (m, shift, keep) = match head {
            Some(c) => {
                let value = tm[(c, 0)];
                let m2 = m1.columns(1, phi.len() - 1).into_owned();
                let m2_shift = m1.column(0) * value;
                (m2, m2_shift, phi[1..].to_vec())
            }
            None => (m1, Vector::zeros(nb), phi.clone()),
        };
        let gb = cur.gb() * &m;
        let ab = cur.ab() * &m;
        let c = cur.c() + cur.gb() * &shift;
        let b = cur.b() - cur.ab() * &shift;
        cur = cur.with_binary_blocks(gb, ab, c, b);
        let entries = cur_t
            .iter()
            .map(|e| BinaryAssignment::new(keep.iter().map(|&i| e.as_slice()[i]).collect()))
            .collect::<Result<Vec<_>>>()?;
        let new_t = IntegerFeasibleSet::new(keep.len(), entries)?;
        if new_t.len() != cur_t.len() {
            return Err(Error::NumericalBreakdown("binary reduction merged distinct leaves".into()));
        }
        cur_t = new_t;
        total_shift = &total_m * &shift + total_shift;
        total_m = &total_m * &m;
        changed = true;
    }
    let after = cur.dims();
    let report = ReductionReport {
        removed_constraint_rows: Vec::new(),
        removed_generator_columns: Vec::new(),
        binary_map: changed.then(|| BinaryMap {
            m: linalg::to_rows(&total_m),
            shift: total_shift.iter().copied().collect(),
        }),
        before,
        after,
    };
    Ok((cur, cur_t, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optq::{enumerate_integer_feasible, support};
    use crate::setops::{halfspace_intersection, Halfspace};
    use crate::setrep::make_box;

    fn square() -> HybridZonotope {
        make_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap().into()
    }

    fn cut(rho: f64) -> HybridZonotope {
        let h = Halfspace::new(Vector::from_vec(vec![1.0, 0.0]), rho).unwrap();
        halfspace_intersection(&square(), &h, &Matrix::identity(2, 2)).unwrap()
    }

    #[test]
    fn inactive_halfspace_is_removed() {
        let (z, rep) = remove_redundant_inequalities(&cut(5.0)).unwrap();
        assert_eq!(z.dims(), SetDims::new(2, 0, 0));
        assert_eq!(rep.removed_constraint_rows, vec![0]);
        assert_eq!(rep.removed_generator_columns, vec![2]);
        assert!(z.slack_tags().is_empty());
    }

    #[test]
    fn active_halfspace_is_kept() {
        let (z, rep) = remove_redundant_inequalities(&cut(0.0)).unwrap();
        assert_eq!(z.dims(), SetDims::new(3, 0, 1));
        assert!(rep.removed_constraint_rows.is_empty());
    }

    #[test]
    fn touching_halfspace_is_kept() {
        let (z, _) = remove_redundant_inequalities(&cut(1.0)).unwrap();
        assert_eq!(z.n_c(), 1);
    }

    #[test]
    fn looser_copy_of_a_constraint_is_removed() {
        let h = Halfspace::new(Vector::from_vec(vec![1.0, 0.0]), 0.5).unwrap();
        let twice = halfspace_intersection(&cut(0.0), &h, &Matrix::identity(2, 2)).unwrap();
        let (z, rep) = remove_redundant_inequalities(&twice).unwrap();
        assert_eq!(rep.removed_constraint_rows, vec![1]);
        let s = support(&z, &Vector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!(s.value.abs() < 1e-9);
    }

    #[test]
    fn duplicated_binary_row() {
        // Two binary generators that always agree: leaves (1,1) and (-1,-1).
        let z = HybridZonotope::new(
            Matrix::zeros(1, 0),
            Matrix::from_row_slice(1, 2, &[1.0, 2.0]),
            Vector::zeros(1),
            Matrix::zeros(1, 0),
            Matrix::from_row_slice(1, 2, &[1.0, -1.0]),
            Vector::zeros(1),
        )
        .unwrap();
        let t = enumerate_integer_feasible(&z).unwrap();
        assert_eq!(t.len(), 2);
        let (r, tr, rep) = reduce_binary_factors(&z, &t).unwrap();
        assert_eq!(r.n_b(), 1);
        assert_eq!(tr.len(), 2);
        assert!(rep.binary_map.is_some());
        for dir in [1.0, -1.0] {
            let l = Vector::from_element(1, dir);
            assert!((support(&z, &l).unwrap().value - support(&r, &l).unwrap().value).abs() < 1e-12);
        }
    }

    #[test]
    fn single_leaf_removes_all_binaries() {
        let z = HybridZonotope::new(
            Matrix::identity(1, 1),
            Matrix::from_row_slice(1, 2, &[1.0, 0.5]),
            Vector::zeros(1),
            Matrix::zeros(1, 1),
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            Vector::from_element(1, 2.0),
        )
        .unwrap();
        let t = enumerate_integer_feasible(&z).unwrap();
        assert_eq!(t.len(), 1);
        let (r, tr, _) = reduce_binary_factors(&z, &t).unwrap();
        assert_eq!(r.n_b(), 0);
        assert_eq!(tr, IntegerFeasibleSet::unit());
        assert!((r.c()[0] - 1.5).abs() < 1e-12);
        for dir in [1.0, -1.0] {
            let l = Vector::from_element(1, dir);
            assert!((support(&z, &l).unwrap().value - support(&r, &l).unwrap().value).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_tree_leaves_set_unchanged() {
        let z = square();
        let t = IntegerFeasibleSet::new(0, vec![]).unwrap();
        let (r, _, rep) = reduce_binary_factors(&z, &t).unwrap();
        assert_eq!(r, z);
        assert_eq!(rep.before, rep.after);
    }

    #[test]
    fn grow_tree_without_new_factors_filters() {
        let z = HybridZonotope::new(
            Matrix::zeros(1, 0),
            Matrix::from_row_slice(1, 1, &[1.0]),
            Vector::zeros(1),
            Matrix::zeros(1, 0),
            Matrix::from_row_slice(1, 1, &[1.0]),
            Vector::from_element(1, 1.0),
        )
        .unwrap();
        let t2 = grow_tree(&z, &IntegerFeasibleSet::full(1)).unwrap();
        assert_eq!(t2.len(), 1);
        assert_eq!(t2.entries()[0].as_slice(), &[1]);
        assert!(matches!(grow_tree(&z, &IntegerFeasibleSet::full(2)), Err(Error::Ordering(_))));
    }

    #[test]
    fn pivoting_respects_forced_first_column() {
        let a = Matrix::from_row_slice(3, 3, &[1.0, 1.0, 2.0, 1.0, -1.0, 0.0, 1.0, 1.0, 2.0]);
        let cols = pivoted_columns(&a, 2, Some(0));
        assert_eq!(cols[0], 0);
        assert_eq!(cols.len(), 2);
        assert_eq!(numerical_rank(&a).unwrap(), 2);
    }
}
