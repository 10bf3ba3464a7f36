//! Support-sampled polygons of 2D projections, and metrics tables for reach runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::optq::{SetSolver, SolverConfig};
use crate::reach::ReachResult;
use crate::setops::linear_map;
use crate::setrep::{BinaryAssignment, HybridZonotope, IntegerFeasibleSet};

/// Default number of sampled directions.
pub const DEFAULT_DIRECTIONS: usize = 250;

/// Tolerance below which an edge is treated as zero length.
const EDGE_TOL: f64 = 1e-10;

/// Outer polygon of a 2D set from sampled support values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonSample {
    /// Leaf this polygon covers; `None` for the whole set.
    pub leaf: Option<BinaryAssignment>,
    pub directions: Vec<[f64; 2]>,
    pub offsets: Vec<f64>,
    /// Counter-clockwise vertices of `∩ {x | dᵢᵀx ≤ offsetᵢ}`.
    pub vertices: Vec<[f64; 2]>,
}

impl PolygonSample {
    /// `max dᵀv` over the polygon's vertices.
    pub fn support(&self, d: [f64; 2]) -> f64 {
        self.vertices.iter().map(|v| d[0] * v[0] + d[1] * v[1]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Membership in the halfplane description.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.directions.iter().zip(&self.offsets).all(|(d, h)| d[0] * p[0] + d[1] * p[1] <= h + tol)
    }
}

/// Unit directions at angles `2πk/n`, starting at 0.
pub fn sample_directions(n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            [a.cos(), a.sin()]
        })
        .collect()
}

/// Samples the projection of `z` onto `axes` in `n_dirs` directions, either
/// as one polygon or one per nonempty leaf. Leaves come from `t` when given.
pub fn project_sample(
    z: &HybridZonotope,
    axes: (usize, usize),
    n_dirs: usize,
    per_leaf: bool,
    t: Option<&IntegerFeasibleSet>,
) -> Result<Vec<PolygonSample>> {
    project_sample_with(z, axes, n_dirs, per_leaf, t, SolverConfig::default())
}

pub fn project_sample_with(
    z: &HybridZonotope,
    axes: (usize, usize),
    n_dirs: usize,
    per_leaf: bool,
    t: Option<&IntegerFeasibleSet>,
    config: SolverConfig,
) -> Result<Vec<PolygonSample>> {
    let n = z.dim();
    if axes.0 >= n || axes.1 >= n || axes.0 == axes.1 {
        return Err(Error::InvalidArgument(format!("axes {axes:?} invalid for a set in R^{n}")));
    }
    if n_dirs < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 directions, got {n_dirs}")));
    }
    if let Some(t) = t {
        if t.n_b() != z.n_b() {
            return Err(Error::Dimension(format!("tree has {} layers, set has {} binaries", t.n_b(), z.n_b())));
        }
    }
    let mut sel = Matrix::zeros(2, n);
    sel[(0, axes.0)] = 1.0;
    sel[(1, axes.1)] = 1.0;
    let proj = linear_map(&sel, z)?;
    let dirs = sample_directions(n_dirs);

    if !per_leaf {
        let mut solver = SetSolver::with_config(&proj, config);
        if let Some(t) = t {
            solver = solver.with_leaves(t)?;
        }
        return Ok(vec![sample(&solver, None, &dirs)?]);
    }
    let leaves = match t {
        Some(t) => t.clone(),
        None => SetSolver::with_config(&proj, config).enumerate()?,
    };
    if leaves.is_empty() {
        return Err(Error::EmptySet);
    }
    leaves
        .iter()
        .map(|xi| {
            let leaf: HybridZonotope = proj.leaf(xi)?.into();
            sample(&SetSolver::with_config(&leaf, config), Some(xi.clone()), &dirs)
        })
        .collect()
}

fn sample(solver: &SetSolver<'_>, leaf: Option<BinaryAssignment>, dirs: &[[f64; 2]]) -> Result<PolygonSample> {
    let offsets = dirs
        .iter()
        .map(|d| Ok(solver.support(&Vector::from_column_slice(d))?.value))
        .collect::<Result<Vec<f64>>>()?;
    let vertices = halfplane_polygon(dirs, &offsets);
    Ok(PolygonSample { leaf, directions: dirs.to_vec(), offsets, vertices })
}

fn meet(d1: [f64; 2], h1: f64, d2: [f64; 2], h2: f64) -> Option<[f64; 2]> {
    let det = d1[0] * d2[1] - d1[1] * d2[0];
    if det.abs() < 1e-14 {
        return None;
    }
    Some([(h1 * d2[1] - h2 * d1[1]) / det, (d1[0] * h2 - d2[0] * h1) / det])
}

/// Intersection of halfplanes `dᵢᵀx ≤ hᵢ` given in increasing angle order,
/// by an angular sweep with a deque. Returns counter-clockwise vertices.
pub fn halfplane_polygon(dirs: &[[f64; 2]], offsets: &[f64]) -> Vec<[f64; 2]> {
    let outside = |i: usize, p: [f64; 2]| dirs[i][0] * p[0] + dirs[i][1] * p[1] > offsets[i] + EDGE_TOL;
    let corner = |i: usize, j: usize| meet(dirs[i], offsets[i], dirs[j], offsets[j]);
    let mut dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for i in 0..dirs.len() {
        while dq.len() >= 2 {
            let (a, b) = (dq[dq.len() - 2], dq[dq.len() - 1]);
            match corner(a, b) {
                Some(p) if !outside(i, p) => break,
                _ => {
                    dq.pop_back();
                }
            }
        }
        while dq.len() >= 2 {
            match corner(dq[0], dq[1]) {
                Some(p) if !outside(i, p) => break,
                _ => {
                    dq.pop_front();
                }
            }
        }
        dq.push_back(i);
    }
    while dq.len() >= 3 {
        let (a, b) = (dq[dq.len() - 2], dq[dq.len() - 1]);
        match corner(a, b) {
            Some(p) if outside(dq[0], p) => {
                dq.pop_back();
            }
            _ => break,
        }
    }
    while dq.len() >= 3 {
        match corner(dq[0], dq[1]) {
            Some(p) if outside(dq[dq.len() - 1], p) => {
                dq.pop_front();
            }
            _ => break,
        }
    }
    let m = dq.len();
    let mut verts: Vec<[f64; 2]> = Vec::with_capacity(m);
    for k in 0..m {
        if let Some(p) = corner(dq[k], dq[(k + 1) % m]) {
            verts.push(p);
        }
    }
    // Zero-length edges mark halfplanes that only touch the polygon.
    let close = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).abs() <= EDGE_TOL && (a[1] - b[1]).abs() <= EDGE_TOL;
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(verts.len());
    for v in verts {
        if out.last().is_none_or(|l| !close(l, &v)) {
            out.push(v);
        }
    }
    while out.len() > 1 && close(&out[0], out.last().expect("nonempty")) {
        out.pop();
    }
    out
}

#[derive(Serialize)]
struct PolygonLeafJson<'a> {
    xi_b: &'a [i8],
    vertices: &'a [[f64; 2]],
}

#[derive(Serialize)]
struct PolygonFileJson<'a> {
    axes: [usize; 2],
    leaves: Vec<PolygonLeafJson<'a>>,
}

/// `{"axes":[i,j],"leaves":[{"xi_b":[…],"vertices":[[x,y],…]}]}`
pub fn polygons_to_json(axes: (usize, usize), polys: &[PolygonSample]) -> String {
    let file = PolygonFileJson {
        axes: [axes.0, axes.1],
        leaves: polys
            .iter()
            .map(|p| PolygonLeafJson {
                xi_b: p.leaf.as_ref().map(BinaryAssignment::as_slice).unwrap_or(&[]),
                vertices: &p.vertices,
            })
            .collect(),
    };
    serde_json::to_string(&file).expect("polygon serialization is infallible")
}

/// One line of a metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub set: String,
    pub n_g: usize,
    pub n_b: usize,
    pub n_c: usize,
    /// `|𝒯|`, when the tree was tracked.
    pub leaves: Option<usize>,
    /// Seconds from the start of the run through this set.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

const CSV_HEADER: &str = "set,n_g,n_b,n_c,leaves,time_s";

impl MetricsTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let leaves = r.leaves.map(|l| l.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{},{},{:.6}\n", r.set, r.n_g, r.n_b, r.n_c, leaves, r.time));
        }
        s
    }

    /// JSON rows; with `timings` false the time column is dropped so the
    /// output is reproducible.
    pub fn to_json(&self, timings: bool) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut v = serde_json::json!({
                    "set": r.set, "n_g": r.n_g, "n_b": r.n_b, "n_c": r.n_c, "leaves": r.leaves,
                });
                if timings {
                    v["time"] = serde_json::json!(r.time);
                }
                v
            })
            .collect();
        serde_json::to_string(&rows).expect("metrics serialization is infallible")
    }
}

/// One row per stored set, labelled `R{k}`, with an `r` suffix when any
/// reduction ran.
pub fn metrics_table(result: &ReachResult) -> MetricsTable {
    let reduced = result.steps.iter().any(|s| s.inequality_report.is_some() || s.binary_report.is_some());
    let suffix = if reduced { "r" } else { "" };
    let mut elapsed = 0.0;
    let rows = result
        .sets
        .iter()
        .enumerate()
        .map(|(k, z)| {
            elapsed += result.timings.get(k).copied().unwrap_or(0.0);
            let d = z.dims();
            MetricsRow {
                set: format!("R{k}{suffix}"),
                n_g: d.n_g,
                n_b: d.n_b,
                n_c: d.n_c,
                leaves: result.trees.as_ref().and_then(|t| t.get(k)).map(IntegerFeasibleSet::len),
                time: elapsed,
            }
        })
        .collect();
    MetricsTable { rows }
}
