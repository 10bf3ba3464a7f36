//! Test-only helpers: a textbook two-phase tableau simplex (Bland's rule)
//! used as an independent LP oracle, and random-instance generators.
#![allow(dead_code)]

use hybzono::linalg::{Matrix, Vector};
use hybzono::setrep::{BinaryAssignment, HybridZonotope};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PIV: f64 = 1e-9;

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, k: usize) {
    let p = t[r][k];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let row = t[r].clone();
    for (i, ti) in t.iter_mut().enumerate() {
        if i != r && ti[k] != 0.0 {
            let f = ti[k];
            for (x, y) in ti.iter_mut().zip(&row) {
                *x -= f * y;
            }
        }
    }
    basis[r] = k;
}

fn run(t: &mut [Vec<f64>], basis: &mut [usize], obj: &[f64], allowed: &dyn Fn(usize) -> bool) {
    let ncol = obj.len();
    loop {
        let enter = (0..ncol).filter(|&k| allowed(k)).find(|&k| {
            let r: f64 = obj[k] - t.iter().zip(basis.iter()).map(|(row, &bi)| obj[bi] * row[k]).sum::<f64>();
            r > PIV
        });
        let Some(k) = enter else { return };
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[k] > PIV {
                let ratio = row[ncol] / row[k];
                let better = match best {
                    None => true,
                    Some((br, _, bb)) => ratio < br - 1e-12 || (ratio <= br + 1e-12 && basis[i] < bb),
                };
                if better {
                    best = Some((ratio, i, basis[i]));
                }
            }
        }
        let (_, r, _) = best.expect("bounded variables keep the LP bounded");
        pivot(t, basis, r, k);
    }
}

/// Maximizes `cᵀx` subject to `a x = b`, `lo ≤ x ≤ hi`.
/// Returns `None` when infeasible.
pub fn oracle_lp(a: &[Vec<f64>], b: &[f64], lo: &[f64], hi: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = lo.len();
    let m = a.len();
    let ncol = 2 * n + m;
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m + n);
    for i in 0..m {
        let mut row = vec![0.0; ncol + 1];
        let mut rhs = b[i];
        for j in 0..n {
            row[j] = a[i][j];
            rhs -= a[i][j] * lo[j];
        }
        if rhs < 0.0 {
            for v in row.iter_mut().take(n) {
                *v = -*v;
            }
            rhs = -rhs;
        }
        row[2 * n + i] = 1.0;
        row[ncol] = rhs;
        t.push(row);
    }
    for j in 0..n {
        let mut row = vec![0.0; ncol + 1];
        row[j] = 1.0;
        row[n + j] = 1.0;
        row[ncol] = hi[j] - lo[j];
        t.push(row);
    }
    let mut basis: Vec<usize> = (0..m).map(|i| 2 * n + i).chain((0..n).map(|j| n + j)).collect();

    let mut phase1 = vec![0.0; ncol];
    for v in phase1.iter_mut().skip(2 * n) {
        *v = -1.0;
    }
    run(&mut t, &mut basis, &phase1, &|_| true);
    let infeas: f64 = t.iter().zip(&basis).filter(|(_, &bi)| bi >= 2 * n).map(|(row, _)| row[ncol]).sum();
    if infeas > 1e-7 {
        return None;
    }
    for r in 0..t.len() {
        if basis[r] >= 2 * n {
            if let Some(k) = (0..2 * n).find(|&k| t[r][k].abs() > PIV) {
                pivot(&mut t, &mut basis, r, k);
            }
        }
    }
    let mut phase2 = vec![0.0; ncol];
    phase2[..n].copy_from_slice(c);
    run(&mut t, &mut basis, &phase2, &|k| k < 2 * n);
    let mut y = vec![0.0; ncol];
    for (row, &bi) in t.iter().zip(&basis) {
        y[bi] = row[ncol];
    }
    let x: Vec<f64> = (0..n).map(|j| lo[j] + y[j]).collect();
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Some((value, x))
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Equality system on `ξc` for leaf `xi`, optionally pinning the point to `p`.
fn leaf_system(z: &HybridZonotope, xi: &[f64], p: Option<&[f64]>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let xb = Vector::from_column_slice(xi);
    let mut a = rows_of(z.ac());
    let mut b: Vec<f64> = (z.b() - z.ab() * &xb).iter().copied().collect();
    if let Some(p) = p {
        a.extend(rows_of(z.gc()));
        let shift = z.c() + z.gb() * &xb;
        b.extend(p.iter().zip(shift.iter()).map(|(pi, s)| pi - s));
    }
    (a, b)
}

pub fn oracle_leaf_feasible(z: &HybridZonotope, xi: &[f64]) -> bool {
    let (a, b) = leaf_system(z, xi, None);
    let ng = z.n_g();
    oracle_lp(&a, &b, &vec![-1.0; ng], &vec![1.0; ng], &vec![0.0; ng]).is_some()
}

pub fn oracle_leaf_contains(z: &HybridZonotope, xi: &[f64], p: &[f64]) -> bool {
    let (a, b) = leaf_system(z, xi, Some(p));
    let ng = z.n_g();
    oracle_lp(&a, &b, &vec![-1.0; ng], &vec![1.0; ng], &vec![0.0; ng]).is_some()
}

/// Max of `lᵀx` over leaf `xi`.
pub fn oracle_leaf_support(z: &HybridZonotope, xi: &[f64], l: &[f64]) -> Option<f64> {
    let (a, b) = leaf_system(z, xi, None);
    let ng = z.n_g();
    let lv = Vector::from_column_slice(l);
    let cost: Vec<f64> = (z.gc().transpose() * &lv).iter().copied().collect();
    let shift = lv.dot(&(z.c() + z.gb() * Vector::from_column_slice(xi)));
    oracle_lp(&a, &b, &vec![-1.0; ng], &vec![1.0; ng], &cost).map(|(v, _)| v + shift)
}

/// Every `±1` vector of length `n`, in lexicographic order (−1 first).
pub fn all_assignments(n: usize) -> Vec<Vec<f64>> {
    (0..1usize << n)
        .map(|bits| (0..n).map(|i| if bits >> (n - 1 - i) & 1 == 1 { 1.0 } else { -1.0 }).collect())
        .collect()
}

pub fn to_assignment(xi: &[f64]) -> BinaryAssignment {
    BinaryAssignment::new(xi.iter().map(|&v| if v > 0.0 { 1 } else { -1 }).collect()).unwrap()
}

/// Brute-force leaf enumeration with the oracle LP.
pub fn oracle_leaves(z: &HybridZonotope) -> Vec<Vec<f64>> {
    all_assignments(z.n_b()).into_iter().filter(|xi| oracle_leaf_feasible(z, xi)).collect()
}

pub fn oracle_support(z: &HybridZonotope, l: &[f64]) -> Option<f64> {
    all_assignments(z.n_b())
        .iter()
        .filter_map(|xi| oracle_leaf_support(z, xi, l))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Random hybrid zonotope with `n ≤ 3`, `n_g ≤ 4`, `n_b ≤ 3`, `n_c ≤ 2`.
/// About half the instances get a right-hand side built from a feasible
/// factor so that they are nonempty.
pub fn random_hz(rng: &mut ChaCha8Rng) -> HybridZonotope {
    let n = rng.random_range(1..=3);
    random_hz_in(rng, n)
}

pub fn random_hz_in(rng: &mut ChaCha8Rng, n: usize) -> HybridZonotope {
    let ng = rng.random_range(1..=4);
    let nb = rng.random_range(0..=3);
    let nc = rng.random_range(0..=2);
    let gc = rand_matrix(rng, n, ng);
    let gb = rand_matrix(rng, n, nb);
    let c = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let ac = rand_matrix(rng, nc, ng);
    let ab = rand_matrix(rng, nc, nb);
    let b = if rng.random_bool(0.5) {
        let xc = Vector::from_fn(ng, |_, _| rng.random_range(-0.9..0.9));
        let xb = Vector::from_fn(nb, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        &ac * xc + &ab * xb
    } else {
        Vector::from_fn(nc, |_, _| rng.random_range(-2.0..2.0))
    };
    HybridZonotope::new(gc, gb, c, ac, ab, b).unwrap()
}

pub fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let v = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

/// Interval hull `c ± Σ|g|`, a box that contains the set.
pub fn interval_hull(z: &HybridZonotope) -> (Vec<f64>, Vec<f64>) {
    (0..z.dim())
        .map(|i| {
            let r: f64 = z.gc().row(i).iter().chain(z.gb().row(i).iter()).map(|v| v.abs()).sum();
            (z.c()[i] - r, z.c()[i] + r)
        })
        .unzip()
}

/// Random member point of leaf `xi` (a convex combination of LP vertices),
/// or `None` when the leaf is empty.
pub fn sample_leaf_point(z: &HybridZonotope, xi: &[f64], rng: &mut ChaCha8Rng) -> Option<Vector> {
    let (a, b) = leaf_system(z, xi, None);
    let ng = z.n_g();
    let mut acc = Vector::zeros(ng);
    let mut total = 0.0;
    for _ in 0..3 {
        let cost: Vec<f64> = (0..ng).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, x) = oracle_lp(&a, &b, &vec![-1.0; ng], &vec![1.0; ng], &cost)?;
        let w: f64 = rng.random_range(0.1..1.0);
        acc += Vector::from_vec(x) * w;
        total += w;
    }
    let xc = acc / total;
    Some(z.gc() * xc + z.gb() * Vector::from_column_slice(xi) + z.c())
}

/// Generator matrix of the small constrained zonotope used in the
/// hybrid-zonotope introduction example.
pub fn example_gz() -> Matrix {
    Matrix::from_row_slice(2, 3, &[1.5, -1.5, 0.5, 1.0, 0.5, -1.0])
}

/// `⟨Gz, 2Gz, 0, ∅, ∅, ∅⟩`: eight translated copies of `⟨Gz, 0⟩`.
pub fn example_zh1() -> HybridZonotope {
    let g = example_gz();
    HybridZonotope::new(g.clone(), &g * 2.0, Vector::zeros(2), Matrix::zeros(0, 3), Matrix::zeros(0, 3), Vector::zeros(0))
        .unwrap()
}

/// `⟨Gz, 2Gz, 0, Az, Az, bz⟩` with `Az = [1 1 1]`, `bz = 1`.
pub fn example_zh2() -> HybridZonotope {
    let g = example_gz();
    let a = Matrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
    HybridZonotope::new(g.clone(), &g * 2.0, Vector::zeros(2), a.clone(), a, Vector::from_vec(vec![1.0])).unwrap()
}

/// Random point of `z` inside a random leaf of `t`: a convex combination of
/// support points of that leaf.
pub fn sample_set_point(z: &HybridZonotope, t: &hybzono::setrep::IntegerFeasibleSet, rng: &mut ChaCha8Rng) -> Vector {
    let xi = &t.entries()[rng.random_range(0..t.len())];
    let leaf: HybridZonotope = z.leaf(xi).unwrap().into();
    let solver = hybzono::optq::SetSolver::new(&leaf);
    let mut acc = Vector::zeros(z.dim());
    let mut total = 0.0;
    for _ in 0..3 {
        let l = random_direction(rng, z.dim());
        let w: f64 = rng.random_range(0.1..1.0);
        acc += solver.support(&l).unwrap().point * w;
        total += w;
    }
    acc / total
}
