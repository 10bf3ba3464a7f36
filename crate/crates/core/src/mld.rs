//! Mixed logical dynamical (MLD) systems
//!
//! ```text
//! x⁺ = A x + Bu u + Bw w + Baff
//! Ex x + Eu u + Ew w ≤ Eaff
//! ```
//!
//! with big-M encoders, zero-order-hold discretization and the two built-in
//! models: a two-mode piecewise affine system and thermostat-controlled
//! heated rooms. Binary variables have `{0, 1}` semantics in the model and
//! become `{-1, +1}` factors through `δ = 0.5 + 0.5 ξ` in the domain sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::optq::SetSolver;
use crate::setops::{halfspace_intersection, Halfspace};
use crate::setrep::{make_box, HybridZonotope, HybridZonotopeJson};

/// Variable counts. Signed so that malformed input can be reported rather than rejected at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MldDims {
    pub n_xc: i64,
    pub n_xl: i64,
    pub n_uc: i64,
    pub n_ul: i64,
    pub n_rc: i64,
    pub n_rl: i64,
    pub n_e: i64,
}

impl MldDims {
    fn u(v: i64) -> usize {
        v.max(0) as usize
    }
    pub fn n(&self) -> usize {
        Self::u(self.n_xc) + Self::u(self.n_xl)
    }
    pub fn n_u(&self) -> usize {
        Self::u(self.n_uc) + Self::u(self.n_ul)
    }
    pub fn n_r(&self) -> usize {
        Self::u(self.n_rc) + Self::u(self.n_rl)
    }
    pub fn n_e(&self) -> usize {
        Self::u(self.n_e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MldSystem {
    pub dims: MldDims,
    pub a: Matrix,
    pub bu: Matrix,
    pub bw: Matrix,
    pub baff: Vector,
    pub ex: Matrix,
    pub eu: Matrix,
    pub ew: Matrix,
    pub eaff: Vector,
    /// Ranges of the continuous auxiliaries implied by their big-M encodings.
    pub aux_bounds: Option<Vec<(f64, f64)>>,
}

impl MldSystem {
    /// Every shape or value violation, empty when the model is well formed.
    pub fn validate(&self) -> Vec<String> {
        let d = &self.dims;
        let mut errs = Vec::new();
        for (name, v) in [
            ("n_xc", d.n_xc),
            ("n_xl", d.n_xl),
            ("n_uc", d.n_uc),
            ("n_ul", d.n_ul),
            ("n_rc", d.n_rc),
            ("n_rl", d.n_rl),
            ("n_e", d.n_e),
        ] {
            if v < 0 {
                errs.push(format!("{name} is negative ({v})"));
            }
        }
        let (n, nu, nr, ne) = (d.n(), d.n_u(), d.n_r(), d.n_e());
        let mut shape = |name: &str, got: (usize, usize), want: (usize, usize)| {
            if got != want {
                errs.push(format!("{name} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1));
            }
        };
        shape("A", self.a.shape(), (n, n));
        shape("Bu", self.bu.shape(), (n, nu));
        shape("Bw", self.bw.shape(), (n, nr));
        shape("Baff", (self.baff.len(), 1), (n, 1));
        shape("Ex", self.ex.shape(), (ne, n));
        shape("Eu", self.eu.shape(), (ne, nu));
        shape("Ew", self.ew.shape(), (ne, nr));
        shape("Eaff", (self.eaff.len(), 1), (ne, 1));
        for (name, ok) in [
            ("A", linalg::is_finite_matrix(&self.a)),
            ("Bu", linalg::is_finite_matrix(&self.bu)),
            ("Bw", linalg::is_finite_matrix(&self.bw)),
            ("Baff", linalg::is_finite_vector(&self.baff)),
            ("Ex", linalg::is_finite_matrix(&self.ex)),
            ("Eu", linalg::is_finite_matrix(&self.eu)),
            ("Ew", linalg::is_finite_matrix(&self.ew)),
            ("Eaff", linalg::is_finite_vector(&self.eaff)),
        ] {
            if !ok {
                errs.push(format!("{name} has non-finite entries"));
            }
        }
        if let Some(bounds) = &self.aux_bounds {
            if bounds.len() != MldDims::u(d.n_rc) {
                errs.push(format!("{} auxiliary bounds for n_rc = {}", bounds.len(), d.n_rc));
            }
            for (i, (lo, hi)) in bounds.iter().enumerate() {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    errs.push(format!("auxiliary bound {i} is not a finite interval"));
                }
            }
        }
        errs
    }

    pub fn check(&self) -> Result<()> {
        let errs = self.validate();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Feasible auxiliary vectors at `(x, u)`: one witness per feasible
    /// assignment of the binary auxiliaries, in lexicographic order.
    pub fn feasible_aux(&self, w_set: &HybridZonotope, x: &Vector, u: &Vector) -> Result<Vec<Vector>> {
        let rhs = &self.eaff - &self.ex * x - &self.eu * u;
        let eye = Matrix::identity(w_set.dim(), w_set.dim());
        let mut s = w_set.clone();
        for i in 0..self.dims.n_e() {
            let row = self.ew.row(i).transpose();
            s = halfspace_intersection(&s, &Halfspace::degenerate(row, rhs[i])?, &eye)?;
        }
        let t = SetSolver::new(&s).enumerate()?;
        t.iter()
            .map(|xi| {
                let leaf: HybridZonotope = s.leaf(xi)?.into();
                let sup = SetSolver::new(&leaf).support(&Vector::zeros(leaf.dim()))?;
                Ok(sup.point)
            })
            .collect()
    }

    /// `A x + Bu u + Bw w + Baff`.
    pub fn successor(&self, x: &Vector, u: &Vector, w: &Vector) -> Vector {
        &self.a * x + &self.bu * u + &self.bw * w + &self.baff
    }
}

/// State, input and auxiliary domains as hybrid zonotopes.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSets {
    pub x: HybridZonotope,
    pub u: HybridZonotope,
    pub w: HybridZonotope,
}

/// Exponential of a square matrix by scaling and squaring of a truncated Taylor series.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("exponential of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    let norm = |a: &Matrix| (0..a.nrows()).map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0i32;
    let mut nm = norm(m);
    while nm > 0.5 {
        nm /= 2.0;
        squarings += 1;
    }
    let scaled = m / 2f64.powi(squarings);
    let mut sum = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if norm(&term) <= 1e-18 * norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

/// Zero-order-hold transform of `ẋ = Ac x + Bc v + f` over a period `ts`.
pub fn zoh_discretize(ac: &Matrix, bc: &Matrix, f: &Vector, ts: f64) -> Result<(Matrix, Matrix, Vector)> {
    let n = ac.nrows();
    if !ac.is_square() {
        return Err(Error::Dimension(format!("continuous dynamics matrix is {}x{}", n, ac.ncols())));
    }
    if bc.nrows() != n || f.len() != n {
        return Err(Error::Dimension("input matrix or affine term does not match the state dimension".into()));
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::InvalidArgument(format!("sampling period {ts} must be positive")));
    }
    let m = bc.ncols();
    let mut aug = Matrix::zeros(n + m + 1, n + m + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(ac);
    aug.view_mut((0, n), (n, m)).copy_from(bc);
    aug.view_mut((0, n + m), (n, 1)).copy_from(f);
    let e = expm(&(aug * ts))?;
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
        e.view((0, n + m), (n, 1)).column(0).into_owned(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    /// `δ = 1 ⇔ rowᵀv ≤ threshold`
    Le,
    /// `δ = 1 ⇔ rowᵀv ≥ threshold`
    Ge,
}

/// One inequality `coeffsᵀv ≤ rhs` over the stacked variable vector.
#[derive(Debug, Clone, PartialEq)]
pub struct IneqRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

fn range_over(row: &[f64], bounds: &[(f64, f64)]) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (0.0, 0.0);
    for (i, &r) in row.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        let (a, b) = bounds[i];
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("variable {i} has an unbounded domain")));
        }
        lo += (r * a).min(r * b);
        hi += (r * a).max(r * b);
    }
    Ok((lo, hi))
}

/// Two big-M rows enforcing `δ = 1 ⇔ rowᵀv ≤ threshold` (or `≥` for [`Sense::Ge`]),
/// with `M` and `m` the extremes of `rowᵀv − threshold` over `bounds`.
/// The reverse implication holds up to `eps`.
pub fn encode_indicator(
    row: &[f64],
    threshold: f64,
    sense: Sense,
    delta_index: usize,
    bounds: &[(f64, f64)],
    eps: f64,
) -> Result<[IneqRow; 2]> {
    if row.len() != bounds.len() || delta_index >= row.len() {
        return Err(Error::Dimension("indicator row, bounds and δ index disagree".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    if row[delta_index] != 0.0 {
        return Err(Error::InvalidArgument("indicator row must not involve δ itself".into()));
    }
    let (row, threshold): (Vec<f64>, f64) = match sense {
        Sense::Le => (row.to_vec(), threshold),
        Sense::Ge => (row.iter().map(|v| -v).collect(), -threshold),
    };
    let (lo, hi) = range_over(&row, bounds)?;
    let (big_m, small_m) = (hi - threshold, lo - threshold);
    // f ≤ M (1 − δ)
    let mut first = row.clone();
    first[delta_index] = big_m;
    // f ≥ eps + (m − eps) δ
    let mut second: Vec<f64> = row.iter().map(|v| -v).collect();
    second[delta_index] = small_m - eps;
    Ok([
        IneqRow { coeffs: first, rhs: threshold + big_m },
        IneqRow { coeffs: second, rhs: -threshold - eps },
    ])
}

/// Four big-M rows enforcing `w = δ · (rowᵀv + offset)`; returns them with the range of `rowᵀv + offset`.
pub fn encode_product(
    row: &[f64],
    offset: f64,
    w_index: usize,
    delta_index: usize,
    bounds: &[(f64, f64)],
) -> Result<([IneqRow; 4], (f64, f64))> {
    if row.len() != bounds.len() || w_index >= row.len() || delta_index >= row.len() {
        return Err(Error::Dimension("product row, bounds and indices disagree".into()));
    }
    if row[w_index] != 0.0 || row[delta_index] != 0.0 {
        return Err(Error::InvalidArgument("product row must not involve w or δ".into()));
    }
    let (lo, hi) = range_over(row, bounds)?;
    let (m, big_m) = (lo + offset, hi + offset);
    let unit = |pairs: &[(usize, f64)]| {
        let mut v = vec![0.0; row.len()];
        for &(i, c) in pairs {
            v[i] += c;
        }
        v
    };
    let with_row = |sign: f64, pairs: &[(usize, f64)]| {
        let mut v: Vec<f64> = row.iter().map(|r| sign * r).collect();
        for &(i, c) in pairs {
            v[i] += c;
        }
        v
    };
    Ok((
        [
            // w ≤ M δ
            IneqRow { coeffs: unit(&[(w_index, 1.0), (delta_index, -big_m)]), rhs: 0.0 },
            // w ≥ m δ
            IneqRow { coeffs: unit(&[(w_index, -1.0), (delta_index, m)]), rhs: 0.0 },
            // w ≤ z − m (1 − δ)
            IneqRow { coeffs: with_row(-1.0, &[(w_index, 1.0), (delta_index, -m)]), rhs: offset - m },
            // w ≥ z − M (1 − δ)
            IneqRow { coeffs: with_row(1.0, &[(w_index, -1.0), (delta_index, big_m)]), rhs: big_m - offset },
        ],
        (m, big_m),
    ))
}

/// Splits rows over `(x, u, w)` into `(Ex, Eu, Ew, Eaff)`.
fn split_rows(rows: &[IneqRow], n: usize, nu: usize, nr: usize) -> (Matrix, Matrix, Matrix, Vector) {
    let ne = rows.len();
    let ex = Matrix::from_fn(ne, n, |i, j| rows[i].coeffs[j]);
    let eu = Matrix::from_fn(ne, nu, |i, j| rows[i].coeffs[n + j]);
    let ew = Matrix::from_fn(ne, nr, |i, j| rows[i].coeffs[n + nu + j]);
    let eaff = Vector::from_iterator(ne, rows.iter().map(|r| r.rhs));
    (ex, eu, ew, eaff)
}

/// Strict-inequality margin of the guard encodings.
pub const GUARD_EPS: f64 = 1e-6;

/// `x × [lo, hi] boxes × {0,1}` binaries as a hybrid zonotope.
fn box_with_binaries(lo: &[f64], hi: &[f64], n_bin: usize) -> Result<HybridZonotope> {
    let cont: HybridZonotope = make_box(lo, hi)?.into();
    if n_bin == 0 {
        return Ok(cont);
    }
    let bins = HybridZonotope::new(
        Matrix::zeros(n_bin, 0),
        Matrix::identity(n_bin, n_bin) * 0.5,
        Vector::from_element(n_bin, 0.5),
        Matrix::zeros(0, 0),
        Matrix::zeros(0, n_bin),
        Vector::zeros(0),
    )?;
    Ok(cont.cartesian_product(&bins))
}

/// `W`: a box over the continuous auxiliaries (from their recorded big-M
/// ranges) times `{0, 1}` for each binary auxiliary.
pub fn build_domain_w(m: &MldSystem, x: &HybridZonotope, u: &HybridZonotope) -> Result<HybridZonotope> {
    m.check()?;
    if x.dim() != m.dims.n() || u.dim() != m.dims.n_u() {
        return Err(Error::Dimension("state or input domain does not match the model".into()));
    }
    let bounds = m
        .aux_bounds
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("model carries no auxiliary bounds".into()))?;
    let lo: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let hi: Vec<f64> = bounds.iter().map(|b| b.1).collect();
    box_with_binaries(&lo, &hi, MldDims::u(m.dims.n_rl))
}

/// Mode matrices of the two-mode piecewise affine system.
pub const PWA_A1: [[f64; 2]; 2] = [[0.75, 0.25], [-0.25, 0.75]];
pub const PWA_A1_AFF: [f64; 2] = [-0.25, -0.25];
pub const PWA_A2: [[f64; 2]; 2] = [[0.75, -0.25], [0.25, 0.75]];
pub const PWA_A2_AFF: [f64; 2] = [0.25, -0.25];

/// Direct evaluation of the piecewise affine map.
pub fn pwa_step(x: &Vector) -> Vector {
    let (a, f) = if x[0] <= 0.0 { (PWA_A1, PWA_A1_AFF) } else { (PWA_A2, PWA_A2_AFF) };
    Vector::from_vec(vec![
        a[0][0] * x[0] + a[0][1] * x[1] + f[0],
        a[1][0] * x[0] + a[1][1] * x[1] + f[1],
    ])
}

/// Initial set of the piecewise affine example.
pub fn pwa_initial_set() -> HybridZonotope {
    HybridZonotope::new(
        Matrix::from_row_slice(2, 2, &[0.25, -0.19, 0.19, 0.25]),
        Matrix::zeros(2, 0),
        Vector::from_vec(vec![-1.31, 2.55]),
        Matrix::zeros(0, 2),
        Matrix::zeros(0, 0),
        Vector::zeros(0),
    )
    .expect("constant initial set is well formed")
}

/// The two-mode system as an MLD model with auxiliaries `(w1, w2, δ)`,
/// `δ = [x1 ≤ 0]` and `w = δ ((A1 − A2) x + a1 − a2)`, so that
/// `x⁺ = A2 x + a2 + w`. State domain `[-5, 5]²`.
pub fn build_pwa_two_mode() -> Result<(MldSystem, DomainSets)> {
    let (n, nu, nr) = (2, 0, 3);
    let nv = n + nu + nr;
    let (w1, w2, delta) = (2, 3, 4);
    let mut bounds = vec![(-5.0, 5.0); n];
    bounds.extend([(f64::NAN, f64::NAN), (f64::NAN, f64::NAN), (0.0, 1.0)]);
    let mut rows = Vec::new();
    let mut guard = vec![0.0; nv];
    guard[0] = 1.0;
    rows.extend(encode_indicator(&guard, 0.0, Sense::Le, delta, &bounds, GUARD_EPS)?);
    let mut aux_bounds = Vec::new();
    for (i, w) in [(0usize, w1), (1, w2)] {
        let mut z = vec![0.0; nv];
        for j in 0..n {
            z[j] = PWA_A1[i][j] - PWA_A2[i][j];
        }
        let (r, range) = encode_product(&z, PWA_A1_AFF[i] - PWA_A2_AFF[i], w, delta, &bounds)?;
        rows.extend(r);
        aux_bounds.push(range);
    }
    let (ex, eu, ew, eaff) = split_rows(&rows, n, nu, nr);
    let a = Matrix::from_fn(2, 2, |i, j| PWA_A2[i][j]);
    let mut bw = Matrix::zeros(n, nr);
    bw[(0, 0)] = 1.0;
    bw[(1, 1)] = 1.0;
    let m = MldSystem {
        dims: MldDims { n_xc: 2, n_xl: 0, n_uc: 0, n_ul: 0, n_rc: 2, n_rl: 1, n_e: rows.len() as i64 },
        a,
        bu: Matrix::zeros(n, 0),
        bw,
        baff: Vector::from_vec(PWA_A2_AFF.to_vec()),
        ex,
        eu,
        ew,
        eaff,
        aux_bounds: Some(aux_bounds),
    };
    m.check()?;
    let x = box_with_binaries(&[-5.0, -5.0], &[5.0, 5.0], 0)?;
    let u = HybridZonotope::point(&[])?;
    let w = build_domain_w(&m, &x, &u)?;
    Ok((m, DomainSets { x, u, w }))
}

/// Heated-rooms parameters.
pub const ROOM_HEATER_POWER: f64 = 15.0;
pub const ROOM_LOSS_PER_WALL: f64 = 0.08;
pub const ROOM_TS: f64 = 0.01;
pub const ROOM_TEMP_DOMAIN: (f64, f64) = (15.0, 30.0);
pub const ROOM_OUTSIDE: (f64, f64) = (0.0, 0.1);
pub const THERMOSTAT_ON_BELOW: f64 = 22.0;
pub const THERMOSTAT_OFF_ABOVE: f64 = 24.0;
const ROOM_INITIAL: [f64; 6] = [23.0, 23.5, 23.5, 22.5, 23.0, 22.5];

/// Discrete heated-rooms dynamics for direct simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomDynamics {
    pub p: usize,
    /// Temperature update `T⁺ = ad T + bd_heat h⁺ + bd_out u`, where `h⁺` is the
    /// heater state chosen by the thermostat from the current sample.
    pub ad: Matrix,
    pub bd_heat: Matrix,
    pub bd_out: Vector,
}

impl RoomDynamics {
    /// Index of the room heated by heater `k`.
    pub fn heater_room(k: usize) -> usize {
        3 * k + 2
    }

    /// One step of the sampled thermostat loop; returns the new temperatures
    /// and the heater states that drove them.
    pub fn step(&self, temps: &Vector, heaters: &[bool], u: f64) -> (Vector, Vec<bool>) {
        let switched: Vec<bool> = heaters
            .iter()
            .enumerate()
            .map(|(k, &on)| {
                let t = temps[Self::heater_room(k)];
                if t <= THERMOSTAT_ON_BELOW {
                    true
                } else if t >= THERMOSTAT_OFF_ABOVE {
                    false
                } else {
                    on
                }
            })
            .collect();
        let h = Vector::from_iterator(self.p, switched.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        let next = &self.ad * temps + &self.bd_heat * h + &self.bd_out * u;
        (next, switched)
    }
}

/// Continuous-time chain of `3p` rooms discretized with a zero-order hold.
pub fn room_dynamics(p: usize) -> Result<RoomDynamics> {
    if !(1..=4).contains(&p) {
        return Err(Error::InvalidArgument(format!("room block count {p} outside 1..=4")));
    }
    let nr = 3 * p;
    let mut ac = Matrix::zeros(nr, nr);
    let mut b_out = Vector::zeros(nr);
    for i in 0..nr {
        let exposed = if i == 0 || i == nr - 1 { 3.0 } else { 2.0 };
        let bi = ROOM_LOSS_PER_WALL * exposed;
        b_out[i] = bi;
        ac[(i, i)] -= bi;
        for j in [i.wrapping_sub(1), i + 1] {
            if j < nr {
                ac[(i, j)] += 1.0;
                ac[(i, i)] -= 1.0;
            }
        }
    }
    let mut bc = Matrix::zeros(nr, p + 1);
    for k in 0..p {
        bc[(RoomDynamics::heater_room(k), k)] = ROOM_HEATER_POWER;
    }
    bc.set_column(p, &b_out);
    let (ad, bd, _) = zoh_discretize(&ac, &bc, &Vector::zeros(nr), ROOM_TS)?;
    Ok(RoomDynamics {
        p,
        ad,
        bd_heat: bd.columns(0, p).into_owned(),
        bd_out: bd.column(p).into_owned(),
    })
}

/// Heated rooms with `3p` temperatures, `p` heater states and, per heater,
/// auxiliaries `δ1 = [T ≤ 22]`, `δ2 = [T ≥ 24]`, `δ3 = δ1 ∨ (h ∧ ¬δ2)` with
/// nine rows; `δ3` is both the heater input for this step and the next heater state.
pub fn build_heated_rooms(p: usize) -> Result<(MldSystem, DomainSets)> {
    let dyn_ = room_dynamics(p)?;
    let (nt, n, nu, nr) = (3 * p, 4 * p, 1, 3 * p);
    let nv = n + nu + nr;
    let mut bounds = vec![ROOM_TEMP_DOMAIN; nt];
    bounds.extend(std::iter::repeat_n((0.0, 1.0), p));
    bounds.push(ROOM_OUTSIDE);
    bounds.extend(std::iter::repeat_n((0.0, 1.0), nr));
    let mut rows = Vec::new();
    let row = |pairs: &[(usize, f64)], rhs: f64| {
        let mut coeffs = vec![0.0; nv];
        for &(i, c) in pairs {
            coeffs[i] += c;
        }
        IneqRow { coeffs, rhs }
    };
    for k in 0..p {
        let t = RoomDynamics::heater_room(k);
        let h = nt + k;
        let (d1, d2, d3) = (n + nu + 3 * k, n + nu + 3 * k + 1, n + nu + 3 * k + 2);
        let mut temp = vec![0.0; nv];
        temp[t] = 1.0;
        rows.extend(encode_indicator(&temp, THERMOSTAT_ON_BELOW, Sense::Le, d1, &bounds, GUARD_EPS)?);
        rows.extend(encode_indicator(&temp, THERMOSTAT_OFF_ABOVE, Sense::Ge, d2, &bounds, GUARD_EPS)?);
        rows.push(row(&[(d1, 1.0), (d3, -1.0)], 0.0));
        rows.push(row(&[(h, 1.0), (d2, -1.0), (d3, -1.0)], 0.0));
        rows.push(row(&[(d3, 1.0), (d1, -1.0), (h, -1.0)], 0.0));
        rows.push(row(&[(d3, 1.0), (d1, -1.0), (d2, 1.0)], 1.0));
        rows.push(row(&[(d1, 1.0), (d2, 1.0)], 1.0));
    }
    let (ex, eu, ew, eaff) = split_rows(&rows, n, nu, nr);
    let mut a = Matrix::zeros(n, n);
    a.view_mut((0, 0), (nt, nt)).copy_from(&dyn_.ad);
    let mut bu = Matrix::zeros(n, nu);
    bu.view_mut((0, 0), (nt, 1)).copy_from(&dyn_.bd_out);
    let mut bw = Matrix::zeros(n, nr);
    for k in 0..p {
        bw[(nt + k, 3 * k + 2)] = 1.0;
        for i in 0..nt {
            bw[(i, 3 * k + 2)] = dyn_.bd_heat[(i, k)];
        }
    }
    let m = MldSystem {
        dims: MldDims {
            n_xc: nt as i64,
            n_xl: p as i64,
            n_uc: 1,
            n_ul: 0,
            n_rc: 0,
            n_rl: nr as i64,
            n_e: rows.len() as i64,
        },
        a,
        bu,
        bw,
        baff: Vector::zeros(n),
        ex,
        eu,
        ew,
        eaff,
        aux_bounds: Some(Vec::new()),
    };
    m.check()?;
    let x = box_with_binaries(&vec![ROOM_TEMP_DOMAIN.0; nt], &vec![ROOM_TEMP_DOMAIN.1; nt], p)?;
    let u: HybridZonotope = make_box(&[ROOM_OUTSIDE.0], &[ROOM_OUTSIDE.1])?.into();
    let w = build_domain_w(&m, &x, &u)?;
    Ok((m, DomainSets { x, u, w }))
}

/// Initial temperatures within ±0.1 of the nominal profile, every heater on.
pub fn heated_rooms_initial_set(p: usize) -> Result<HybridZonotope> {
    if !(1..=4).contains(&p) {
        return Err(Error::InvalidArgument(format!("room block count {p} outside 1..=4")));
    }
    let nt = 3 * p;
    let nominal: Vec<f64> = (0..nt).map(|i| ROOM_INITIAL[i % ROOM_INITIAL.len()]).collect();
    let lo: Vec<f64> = nominal.iter().map(|v| v - 0.1).collect();
    let hi: Vec<f64> = nominal.iter().map(|v| v + 0.1).collect();
    let temps: HybridZonotope = make_box(&lo, &hi)?.into();
    Ok(temps.cartesian_product(&HybridZonotope::point(&vec![1.0; p])?))
}

/// Model file layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MldModelJson {
    pub dims: MldDims,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "Bu")]
    pub bu: Vec<Vec<f64>>,
    #[serde(rename = "Bw")]
    pub bw: Vec<Vec<f64>>,
    #[serde(rename = "Baff")]
    pub baff: Vec<f64>,
    #[serde(rename = "Ex")]
    pub ex: Vec<Vec<f64>>,
    #[serde(rename = "Eu")]
    pub eu: Vec<Vec<f64>>,
    #[serde(rename = "Ew")]
    pub ew: Vec<Vec<f64>>,
    #[serde(rename = "Eaff")]
    pub eaff: Vec<f64>,
    #[serde(rename = "X")]
    pub x: HybridZonotopeJson,
    #[serde(rename = "U")]
    pub u: HybridZonotopeJson,
    #[serde(rename = "W")]
    pub w: HybridZonotopeJson,
    /// Optional initial set used by `run`.
    #[serde(rename = "R0", default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<HybridZonotopeJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_bounds: Option<Vec<(f64, f64)>>,
}

/// A model file's content after validation.
#[derive(Debug, Clone, PartialEq)]
pub struct MldModel {
    pub system: MldSystem,
    pub domains: DomainSets,
    pub initial: Option<HybridZonotope>,
}

impl MldModel {
    pub fn to_json(&self) -> String {
        let s = &self.system;
        let rows = linalg::to_rows;
        let j = MldModelJson {
            dims: s.dims,
            a: rows(&s.a),
            bu: rows(&s.bu),
            bw: rows(&s.bw),
            baff: s.baff.iter().copied().collect(),
            ex: rows(&s.ex),
            eu: rows(&s.eu),
            ew: rows(&s.ew),
            eaff: s.eaff.iter().copied().collect(),
            x: (&self.domains.x).into(),
            u: (&self.domains.u).into(),
            w: (&self.domains.w).into(),
            r0: self.initial.as_ref().map(Into::into),
            aux_bounds: s.aux_bounds.clone(),
        };
        serde_json::to_string(&j).expect("model serialization is infallible")
    }

    /// Parses and validates, collecting every violation found.
    pub fn from_json(text: &str) -> Result<Self> {
        let j: MldModelJson = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        let d = j.dims;
        let (n, nu, nr, ne) = (d.n(), d.n_u(), d.n_r(), d.n_e());
        let mut errs = Vec::new();
        let mut mat = |name: &str, data: &[Vec<f64>], r: usize, c: usize| {
            linalg::from_rows(data, r, c).unwrap_or_else(|| {
                errs.push(format!("{name} does not have shape {r}x{c}"));
                Matrix::zeros(r, c)
            })
        };
        let a = mat("A", &j.a, n, n);
        let bu = mat("Bu", &j.bu, n, nu);
        let bw = mat("Bw", &j.bw, n, nr);
        let ex = mat("Ex", &j.ex, ne, n);
        let eu = mat("Eu", &j.eu, ne, nu);
        let ew = mat("Ew", &j.ew, ne, nr);
        let system = MldSystem {
            dims: d,
            a,
            bu,
            bw,
            baff: Vector::from_vec(j.baff),
            ex,
            eu,
            ew,
            eaff: Vector::from_vec(j.eaff),
            aux_bounds: j.aux_bounds,
        };
        errs.extend(system.validate());
        let mut set = |name: &str, s: HybridZonotopeJson, dim: usize| match HybridZonotope::try_from(s) {
            Ok(z) if z.dim() == dim => Some(z),
            Ok(z) => {
                errs.push(format!("{name} has dimension {}, expected {dim}", z.dim()));
                None
            }
            Err(e) => {
                errs.push(format!("{name}: {e}"));
                None
            }
        };
        let x = set("X", j.x, n);
        let u = set("U", j.u, nu);
        let w = set("W", j.w, nr);
        let initial = j.r0.and_then(|r| set("R0", r, n));
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        Ok(Self {
            system,
            domains: DomainSets { x: x.expect("checked"), u: u.expect("checked"), w: w.expect("checked") },
            initial,
        })
    }
}
