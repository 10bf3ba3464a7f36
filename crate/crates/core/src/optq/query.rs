//! Set queries on hybrid zonotopes, each posed over the factor vector
//! `(ξc, ξb)` with constraints `Ac ξc + Ab ξb = b`.

use super::milp::{enumerate_from, optimize_from};
use super::simplex::{DualSimplex, LpStatus};
use super::{MilpMode, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::setops::{halfspace_intersection, Halfspace};
use crate::setrep::{HybridZonotope, IntegerFeasibleSet};

/// Result of a support-function evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    /// `max lᵀz` over the set.
    pub value: f64,
    /// `{x | lᵀx ≤ value}`: contains the set and touches it at `point`.
    pub halfspace: Halfspace,
    pub point: Vector,
    /// Factor vector `(ξc, ξb)` producing `point`.
    pub factors: Vec<f64>,
}

fn factor_simplex(z: &HybridZonotope, extra_rows: Option<(&Matrix, &Vector)>) -> DualSimplex {
    let nf = z.n_g() + z.n_b();
    let cons = linalg::hstack(z.n_c(), &[z.ac(), z.ab()]);
    let (a, b) = match extra_rows {
        Some((ea, eb)) => (linalg::vstack(nf, &[&cons, ea]), linalg::vcat(&[z.b(), eb])),
        None => (cons, z.b().clone()),
    };
    DualSimplex::new(&a, b.as_slice(), &vec![-1.0; nf], &vec![1.0; nf], &vec![0.0; nf])
}

fn binary_vars(z: &HybridZonotope) -> Vec<usize> {
    (z.n_g()..z.n_g() + z.n_b()).collect()
}

fn check_hint(z: &HybridZonotope, t: &IntegerFeasibleSet) -> Result<()> {
    if t.n_b() > z.n_b() {
        return Err(Error::Dimension(format!(
            "integer-feasible set has {} factors, set has {}",
            t.n_b(),
            z.n_b()
        )));
    }
    Ok(())
}

/// Reusable solver for repeated queries on one set.
///
/// With [`SetSolver::with_leaves`], searches only visit the given binary
/// assignments, which is exact when they are the set's complete
/// integer-feasible set.
#[derive(Debug, Clone)]
pub struct SetSolver<'a> {
    z: &'a HybridZonotope,
    root: DualSimplex,
    bins: Vec<usize>,
    config: SolverConfig,
    hint: Option<IntegerFeasibleSet>,
}

impl<'a> SetSolver<'a> {
    pub fn new(z: &'a HybridZonotope) -> Self {
        Self::with_config(z, SolverConfig::default())
    }

    pub fn with_config(z: &'a HybridZonotope, config: SolverConfig) -> Self {
        Self { z, root: factor_simplex(z, None), bins: binary_vars(z), config, hint: None }
    }

    pub fn with_leaves(mut self, t: &IntegerFeasibleSet) -> Result<Self> {
        check_hint(self.z, t)?;
        self.hint = Some(t.clone());
        Ok(self)
    }

    pub fn is_empty(&self) -> Result<bool> {
        let mut root = self.root.clone();
        let (best, _) =
            optimize_from(&mut root, &self.bins, self.hint.as_ref(), MilpMode::Feasibility, self.config.node_budget)?;
        Ok(best.is_none())
    }

    /// A feasible factor vector, if the set is nonempty.
    pub fn witness(&self) -> Result<Option<Vec<f64>>> {
        let mut root = self.root.clone();
        let (best, _) =
            optimize_from(&mut root, &self.bins, self.hint.as_ref(), MilpMode::Feasibility, self.config.node_budget)?;
        Ok(best.map(|(_, x)| x))
    }

    pub fn support(&self, l: &Vector) -> Result<Support> {
        let z = self.z;
        if l.len() != z.dim() {
            return Err(Error::Dimension(format!(
                "direction has length {}, set has dimension {}",
                l.len(),
                z.dim()
            )));
        }
        if !linalg::is_finite_vector(l) {
            return Err(Error::NonFinite("support direction".into()));
        }
        let g = linalg::hstack(z.dim(), &[z.gc(), z.gb()]);
        let cost = g.transpose() * l;
        let mut root = self.root.clone();
        root.set_cost(cost.as_slice());
        let (best, _) =
            optimize_from(&mut root, &self.bins, self.hint.as_ref(), MilpMode::Maximize, self.config.node_budget)?;
        let (_, x) = best.ok_or(Error::EmptySet)?;
        let xv = Vector::from_column_slice(&x);
        let point = &g * &xv + z.c();
        let value = l.dot(&point);
        Ok(Support { value, halfspace: Halfspace::degenerate(l.clone(), value)?, point, factors: x })
    }

    /// Every binary assignment with a nonempty leaf, sorted.
    pub fn enumerate(&self) -> Result<IntegerFeasibleSet> {
        let mut root = self.root.clone();
        let e = enumerate_from(&mut root, &self.bins, self.hint.as_ref(), self.config.node_budget)?;
        IntegerFeasibleSet::new(self.z.n_b(), e.assignments)
    }

    pub fn contains_point(&self, p: &Vector) -> Result<bool> {
        contains_point_with(self.z, p, self.config, self.hint.as_ref())
    }
}

pub fn is_empty(z: &HybridZonotope) -> Result<bool> {
    SetSolver::new(z).is_empty()
}

pub fn support(z: &HybridZonotope, l: &Vector) -> Result<Support> {
    SetSolver::new(z).support(l)
}

pub fn enumerate_integer_feasible(z: &HybridZonotope) -> Result<IntegerFeasibleSet> {
    SetSolver::new(z).enumerate()
}

/// Whether `{z ∈ Z | lᵀR z ≤ ρ}` is nonempty, decided by one feasibility MILP.
pub fn intersects_halfspace(z: &HybridZonotope, h: &Halfspace, r: &Matrix) -> Result<bool> {
    Ok(!is_empty(&halfspace_intersection(z, h, r)?)?)
}

pub fn contains_point(z: &HybridZonotope, p: &Vector) -> Result<bool> {
    contains_point_with(z, p, SolverConfig::default(), None)
}

pub(crate) fn contains_point_with(
    z: &HybridZonotope,
    p: &Vector,
    config: SolverConfig,
    hint: Option<&IntegerFeasibleSet>,
) -> Result<bool> {
    if p.len() != z.dim() {
        return Err(Error::Dimension(format!("point has length {}, set has dimension {}", p.len(), z.dim())));
    }
    if !linalg::is_finite_vector(p) {
        return Err(Error::NonFinite("query point".into()));
    }
    let g = linalg::hstack(z.dim(), &[z.gc(), z.gb()]);
    let rhs = p - z.c();
    let mut root = factor_simplex(z, Some((&g, &rhs)));
    let (best, _) = optimize_from(&mut root, &binary_vars(z), hint, MilpMode::Feasibility, config.node_budget)?;
    Ok(best.is_some())
}

/// Point-membership oracle for many points, one warm LP per leaf.
///
/// Exact when `t` is the complete integer-feasible set of the set.
#[derive(Debug, Clone)]
pub struct LeafPointOracle {
    dim: usize,
    n_c: usize,
    leaves: Vec<(DualSimplex, Vector)>,
}

impl LeafPointOracle {
    pub fn new(z: &HybridZonotope, t: &IntegerFeasibleSet) -> Result<Self> {
        let leaves = z.decompose(t)?;
        let n = z.dim();
        let leaves = leaves
            .into_iter()
            .map(|leaf| {
                let ng = leaf.g().ncols();
                let a = linalg::vstack(ng, &[leaf.a(), leaf.g()]);
                let b = linalg::vcat(&[leaf.b(), &Vector::zeros(n)]);
                let sx = DualSimplex::new(&a, b.as_slice(), &vec![-1.0; ng], &vec![1.0; ng], &vec![0.0; ng]);
                (sx, leaf.c().clone())
            })
            .collect();
        Ok(Self { dim: n, n_c: z.n_c(), leaves })
    }

    pub fn contains(&mut self, p: &Vector) -> Result<bool> {
        if p.len() != self.dim {
            return Err(Error::Dimension(format!("point has length {}, set has dimension {}", p.len(), self.dim)));
        }
        for (sx, c) in &mut self.leaves {
            for i in 0..self.dim {
                sx.set_rhs(self.n_c + i, p[i] - c[i]);
            }
            if sx.solve()? == LpStatus::Optimal {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setrep::make_box;

    fn square() -> HybridZonotope {
        make_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap().into()
    }

    #[test]
    fn unit_box_queries() {
        let z = square();
        assert!(!is_empty(&z).unwrap());
        assert!(contains_point(&z, &Vector::zeros(2)).unwrap());
        assert!(!contains_point(&z, &Vector::from_vec(vec![2.0, 0.0])).unwrap());
        let s = support(&z, &Vector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
        let s = support(&z, &Vector::from_vec(vec![-1.0, 0.0])).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!((s.point[0] + 1.0).abs() < 1e-12);
        assert!(contains_point(&z, &Vector::from_vec(vec![1.0, 0.5])).unwrap());
    }

    #[test]
    fn infeasible_constraint_gives_empty_set() {
        let z = HybridZonotope::new(
            Matrix::identity(2, 2),
            Matrix::zeros(2, 0),
            Vector::zeros(2),
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            Matrix::zeros(1, 0),
            Vector::from_element(1, 3.0),
        )
        .unwrap();
        assert!(is_empty(&z).unwrap());
        assert_eq!(support(&z, &Vector::from_vec(vec![1.0, 0.0])).unwrap_err(), Error::EmptySet);
        assert!(enumerate_integer_feasible(&z).unwrap().is_empty());
    }

    #[test]
    fn halfspace_tests() {
        let z = square();
        let r = Matrix::identity(2, 2);
        let left = Halfspace::new(Vector::from_vec(vec![1.0, 0.0]), 0.0).unwrap();
        let far = Halfspace::new(Vector::from_vec(vec![1.0, 0.0]), -5.0).unwrap();
        assert!(intersects_halfspace(&z, &left, &r).unwrap());
        assert!(!intersects_halfspace(&z, &far, &r).unwrap());
    }

    #[test]
    fn no_binaries_enumerates_unit() {
        let t = enumerate_integer_feasible(&square()).unwrap();
        assert_eq!(t, IntegerFeasibleSet::unit());
    }

    #[test]
    fn dimension_errors() {
        let z = square();
        assert!(contains_point(&z, &Vector::zeros(3)).is_err());
        assert!(support(&z, &Vector::zeros(1)).is_err());
    }

    #[test]
    fn leaf_oracle_matches_milp() {
        // Two unit squares centred at (±2, 0).
        let z = HybridZonotope::new(
            Matrix::identity(2, 2),
            Matrix::from_row_slice(2, 1, &[2.0, 0.0]),
            Vector::zeros(2),
            Matrix::zeros(0, 2),
            Matrix::zeros(0, 1),
            Vector::zeros(0),
        )
        .unwrap();
        let t = enumerate_integer_feasible(&z).unwrap();
        assert_eq!(t.len(), 2);
        let mut oracle = LeafPointOracle::new(&z, &t).unwrap();
        for p in [[0.0, 0.0], [2.5, 0.5], [-1.5, -1.0], [3.1, 0.0], [1.0, 0.0]] {
            let v = Vector::from_vec(p.to_vec());
            assert_eq!(oracle.contains(&v).unwrap(), contains_point(&z, &v).unwrap(), "{p:?}");
        }
    }
}
