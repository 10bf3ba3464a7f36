//! Closed-form set operations on hybrid zonotopes: linear map, Minkowski
//! sum, generalized intersection and halfspace intersection.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::setrep::{HybridZonotope, SlackTag};

/// `{x | lᵀx ≤ rho}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    l: Vector,
    rho: f64,
}

impl Halfspace {
    /// Rejects an all-zero normal; use [`Halfspace::degenerate`] for those.
    pub fn new(l: Vector, rho: f64) -> Result<Self> {
        if l.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidArgument("halfspace normal is all-zero".into()));
        }
        Self::degenerate(l, rho)
    }

    /// Allows an all-zero normal, giving either the whole space or the empty set.
    pub fn degenerate(l: Vector, rho: f64) -> Result<Self> {
        if !linalg::is_finite_vector(&l) || !rho.is_finite() {
            return Err(Error::NonFinite("halfspace".into()));
        }
        Ok(Self { l, rho })
    }

    pub fn l(&self) -> &Vector {
        &self.l
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.l.dot(x) <= self.rho + tol
    }
}

fn shift_tags(tags: &[SlackTag], dc: usize, dr: usize) -> impl Iterator<Item = SlackTag> + '_ {
    tags.iter().map(move |t| SlackTag { column: t.column + dc, row: t.row + dr })
}

/// `R Z = ⟨R Gc, R Gb, R c, Ac, Ab, b⟩`.
pub fn linear_map(r: &Matrix, z: &HybridZonotope) -> Result<HybridZonotope> {
    if r.ncols() != z.dim() {
        return Err(Error::Dimension(format!(
            "map has {} columns, set has dimension {}",
            r.ncols(),
            z.dim()
        )));
    }
    Ok(HybridZonotope::from_parts(
        r * z.gc(),
        r * z.gb(),
        r * z.c(),
        z.ac().clone(),
        z.ab().clone(),
        z.b().clone(),
        z.slack_tags().to_vec(),
    ))
}

/// `Z ⊕ W`.
pub fn minkowski_sum(z: &HybridZonotope, w: &HybridZonotope) -> Result<HybridZonotope> {
    if z.dim() != w.dim() {
        return Err(Error::Dimension(format!(
            "Minkowski sum of sets in dimensions {} and {}",
            z.dim(),
            w.dim()
        )));
    }
    let n = z.dim();
    let mut tags = z.slack_tags().to_vec();
    tags.extend(shift_tags(w.slack_tags(), z.n_g(), z.n_c()));
    Ok(HybridZonotope::from_parts(
        linalg::hstack(n, &[z.gc(), w.gc()]),
        linalg::hstack(n, &[z.gb(), w.gb()]),
        z.c() + w.c(),
        linalg::block_diag(z.ac(), w.ac()),
        linalg::block_diag(z.ab(), w.ab()),
        linalg::vcat(&[z.b(), w.b()]),
        tags,
    ))
}

/// `Z ∩_R Y = {z ∈ Z | R z ∈ Y}`.
pub fn generalized_intersection(
    z: &HybridZonotope,
    y: &HybridZonotope,
    r: &Matrix,
) -> Result<HybridZonotope> {
    if r.shape() != (y.dim(), z.dim()) {
        return Err(Error::Dimension(format!(
            "intersection map is {}x{}, expected {}x{}",
            r.nrows(),
            r.ncols(),
            y.dim(),
            z.dim()
        )));
    }
    let n = z.dim();
    let (ncz, ncy) = (z.n_c(), y.n_c());
    let ac = linalg::vstack(
        z.n_g() + y.n_g(),
        &[
            &linalg::hstack(ncz, &[z.ac(), &Matrix::zeros(ncz, y.n_g())]),
            &linalg::hstack(ncy, &[&Matrix::zeros(ncy, z.n_g()), y.ac()]),
            &linalg::hstack(y.dim(), &[&(r * z.gc()), &(-y.gc())]),
        ],
    );
    let ab = linalg::vstack(
        z.n_b() + y.n_b(),
        &[
            &linalg::hstack(ncz, &[z.ab(), &Matrix::zeros(ncz, y.n_b())]),
            &linalg::hstack(ncy, &[&Matrix::zeros(ncy, z.n_b()), y.ab()]),
            &linalg::hstack(y.dim(), &[&(r * z.gb()), &(-y.gb())]),
        ],
    );
    let b = linalg::vcat(&[z.b(), y.b(), &(y.c() - r * z.c())]);
    let mut tags = z.slack_tags().to_vec();
    tags.extend(shift_tags(y.slack_tags(), z.n_g(), ncz));
    Ok(HybridZonotope::from_parts(
        linalg::hstack(n, &[z.gc(), &Matrix::zeros(n, y.n_g())]),
        linalg::hstack(n, &[z.gb(), &Matrix::zeros(n, y.n_b())]),
        z.c().clone(),
        ac,
        ab,
        b,
        tags,
    ))
}

/// Distance `d_m = ρ − lᵀRc + Σ|lᵀR gc| + Σ|lᵀR gb|` between the halfspace
/// boundary and the minimum of `lᵀR z` over the zonotope relaxation.
pub fn halfspace_margin(z: &HybridZonotope, h: &Halfspace, r: &Matrix) -> Result<f64> {
    let lr = check_halfspace_shapes(z, h, r)?;
    Ok(margin_from(z, h, &lr))
}

fn check_halfspace_shapes(z: &HybridZonotope, h: &Halfspace, r: &Matrix) -> Result<Matrix> {
    if r.ncols() != z.dim() || r.nrows() != h.l().len() {
        return Err(Error::Dimension(format!(
            "halfspace map is {}x{} with normal of length {}, set has dimension {}",
            r.nrows(),
            r.ncols(),
            h.l().len(),
            z.dim()
        )));
    }
    let lr = r.transpose() * h.l();
    Ok(Matrix::from_row_slice(1, lr.len(), lr.as_slice()))
}

fn margin_from(z: &HybridZonotope, h: &Halfspace, lr: &Matrix) -> f64 {
    let lc = (lr * z.c())[0];
    let sc: f64 = (lr * z.gc()).iter().map(|v| v.abs()).sum();
    let sb: f64 = (lr * z.gb()).iter().map(|v| v.abs()).sum();
    h.rho() - lc + sc + sb
}

/// `Z ∩_R H = {z ∈ Z | lᵀR z ≤ ρ}`, adding one slack factor and one
/// constraint row `lᵀR(Gc ξc + Gb ξb) + s ξ_h = ρ − lᵀR c − s`.
///
/// The slack coefficient is `s = max(d_m, 0) / 2`. With `d_m < 0` the whole
/// zonotope relaxation violates the halfspace; `s = 0` then turns the new row
/// into `lᵀR z = ρ`, which no point of the set satisfies, so the result is
/// empty as it should be.
pub fn halfspace_intersection(z: &HybridZonotope, h: &Halfspace, r: &Matrix) -> Result<HybridZonotope> {
    let lr = check_halfspace_shapes(z, h, r)?;
    let d_m = margin_from(z, h, &lr);
    if !d_m.is_finite() {
        return Err(Error::NonFinite("halfspace margin d_m".into()));
    }
    let s = d_m.max(0.0) / 2.0;
    let (n, ng, nc) = (z.dim(), z.n_g(), z.n_c());
    let slack_col = {
        let mut col = Matrix::zeros(nc + 1, 1);
        col[(nc, 0)] = s;
        col
    };
    let ac = linalg::hstack(nc + 1, &[&linalg::vstack(ng, &[z.ac(), &(&lr * z.gc())]), &slack_col]);
    let ab = linalg::vstack(z.n_b(), &[z.ab(), &(&lr * z.gb())]);
    let rhs = h.rho() - (&lr * z.c())[0] - s;
    let b = linalg::vcat(&[z.b(), &Vector::from_element(1, rhs)]);
    let mut tags = z.slack_tags().to_vec();
    tags.push(SlackTag { column: ng, row: nc });
    Ok(HybridZonotope::from_parts(
        linalg::hstack(n, &[z.gc(), &Matrix::zeros(n, 1)]),
        z.gb().clone(),
        z.c().clone(),
        ac,
        ab,
        b,
        tags,
    ))
}
