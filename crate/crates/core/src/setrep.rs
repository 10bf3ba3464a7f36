//! Zonotope, constrained zonotope and hybrid zonotope representations.
//!
//! A hybrid zonotope `⟨Gc, Gb, c, Ac, Ab, b⟩` is the set of points
//! `Gc ξc + Gb ξb + c` where `ξc ∈ [-1, 1]^ng`, `ξb ∈ {-1, 1}^nb` and
//! `Ac ξc + Ab ξb = b`. Fixing the binary factors yields a constrained
//! zonotope (a *leaf*); fixing a prefix of them yields a *branch node*.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// `⟨G, c⟩`: the affine image of the unit hypercube.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    g: Matrix,
    c: Vector,
}

impl Zonotope {
    pub fn new(g: Matrix, c: Vector) -> Result<Self> {
        if g.nrows() != c.len() {
            return Err(Error::Dimension(format!(
                "generator matrix has {} rows but center has length {}",
                g.nrows(),
                c.len()
            )));
        }
        if !linalg::is_finite_matrix(&g) || !linalg::is_finite_vector(&c) {
            return Err(Error::NonFinite("zonotope entries".into()));
        }
        Ok(Self { g, c })
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    pub fn c(&self) -> &Vector {
        &self.c
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }
}

/// Axis-aligned box `[lo, hi]` as the zonotope `⟨diag((hi-lo)/2), (hi+lo)/2⟩`.
pub fn make_box(lo: &[f64], hi: &[f64]) -> Result<Zonotope> {
    if lo.len() != hi.len() {
        return Err(Error::Dimension(format!(
            "box bounds have lengths {} and {}",
            lo.len(),
            hi.len()
        )));
    }
    if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
        return Err(Error::InvalidArgument(format!(
            "lower bound {} exceeds upper bound {} in coordinate {i}",
            lo[i], hi[i]
        )));
    }
    let n = lo.len();
    let g = Matrix::from_fn(n, n, |i, j| if i == j { (hi[i] - lo[i]) / 2.0 } else { 0.0 });
    let c = Vector::from_fn(n, |i, _| (hi[i] + lo[i]) / 2.0);
    Zonotope::new(g, c)
}

/// `⟨G, c, A, b⟩`: a zonotope whose factors also satisfy `A ξ = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedZonotope {
    g: Matrix,
    c: Vector,
    a: Matrix,
    b: Vector,
}

impl ConstrainedZonotope {
    pub fn new(g: Matrix, c: Vector, a: Matrix, b: Vector) -> Result<Self> {
        if g.nrows() != c.len() {
            return Err(Error::Dimension(format!(
                "generator matrix has {} rows but center has length {}",
                g.nrows(),
                c.len()
            )));
        }
        if a.ncols() != g.ncols() {
            return Err(Error::Dimension(format!(
                "constraint matrix has {} columns, generator matrix has {}",
                a.ncols(),
                g.ncols()
            )));
        }
        if a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "constraint matrix has {} rows but right-hand side has length {}",
                a.nrows(),
                b.len()
            )));
        }
        for (name, ok) in [
            ("G", linalg::is_finite_matrix(&g)),
            ("c", linalg::is_finite_vector(&c)),
            ("A", linalg::is_finite_matrix(&a)),
            ("b", linalg::is_finite_vector(&b)),
        ] {
            if !ok {
                return Err(Error::NonFinite(format!("constrained zonotope block {name}")));
            }
        }
        Ok(Self { g, c, a, b })
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    pub fn c(&self) -> &Vector {
        &self.c
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }
}

impl From<Zonotope> for ConstrainedZonotope {
    fn from(z: Zonotope) -> Self {
        let ng = z.g.ncols();
        Self { g: z.g, c: z.c, a: Matrix::zeros(0, ng), b: Vector::zeros(0) }
    }
}

/// Marks a continuous factor introduced by a halfspace intersection together
/// with the single constraint row it appears in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlackTag {
    pub column: usize,
    pub row: usize,
}

/// Representation complexity `(n_g, n_b, n_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SetDims {
    pub n_g: usize,
    pub n_b: usize,
    pub n_c: usize,
}

impl SetDims {
    pub fn new(n_g: usize, n_b: usize, n_c: usize) -> Self {
        Self { n_g, n_b, n_c }
    }
}

impl std::fmt::Display for SetDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.n_g, self.n_b, self.n_c)
    }
}

/// `⟨Gc, Gb, c, Ac, Ab, b⟩` in hybrid constrained generator form.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridZonotope {
    gc: Matrix,
    gb: Matrix,
    c: Vector,
    ac: Matrix,
    ab: Matrix,
    b: Vector,
    slack_tags: Vec<SlackTag>,
}

impl HybridZonotope {
    pub fn new(gc: Matrix, gb: Matrix, c: Vector, ac: Matrix, ab: Matrix, b: Vector) -> Result<Self> {
        let n = c.len();
        let check = |what: &str, got: (usize, usize), want: (usize, usize)| {
            if got != want {
                Err(Error::Dimension(format!("{what} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1)))
            } else {
                Ok(())
            }
        };
        let (ng, nb, nc) = (gc.ncols(), gb.ncols(), b.len());
        check("Gc", gc.shape(), (n, ng))?;
        check("Gb", gb.shape(), (n, nb))?;
        check("Ac", ac.shape(), (nc, ng))?;
        check("Ab", ab.shape(), (nc, nb))?;
        for (name, ok) in [
            ("Gc", linalg::is_finite_matrix(&gc)),
            ("Gb", linalg::is_finite_matrix(&gb)),
            ("c", linalg::is_finite_vector(&c)),
            ("Ac", linalg::is_finite_matrix(&ac)),
            ("Ab", linalg::is_finite_matrix(&ab)),
            ("b", linalg::is_finite_vector(&b)),
        ] {
            if !ok {
                return Err(Error::NonFinite(format!("hybrid zonotope block {name}")));
            }
        }
        Ok(Self { gc, gb, c, ac, ab, b, slack_tags: Vec::new() })
    }

    /// Attaches slack tags; each must reference an existing column and row.
    pub fn with_slack_tags(mut self, mut tags: Vec<SlackTag>) -> Result<Self> {
        tags.sort();
        tags.dedup();
        for t in &tags {
            if t.column >= self.n_g() || t.row >= self.n_c() {
                return Err(Error::InvalidArgument(format!(
                    "slack tag (column {}, row {}) outside a set with n_g = {}, n_c = {}",
                    t.column,
                    t.row,
                    self.n_g(),
                    self.n_c()
                )));
            }
        }
        self.slack_tags = tags;
        Ok(self)
    }

    /// Assembles a set produced by an identity whose shapes are correct by construction.
    pub(crate) fn from_parts(
        gc: Matrix,
        gb: Matrix,
        c: Vector,
        ac: Matrix,
        ab: Matrix,
        b: Vector,
        mut slack_tags: Vec<SlackTag>,
    ) -> Self {
        debug_assert_eq!(gc.nrows(), c.len());
        debug_assert_eq!(gb.nrows(), c.len());
        debug_assert_eq!(ac.shape(), (b.len(), gc.ncols()));
        debug_assert_eq!(ab.shape(), (b.len(), gb.ncols()));
        slack_tags.sort();
        debug_assert!(slack_tags.iter().all(|t| t.column < gc.ncols() && t.row < b.len()));
        Self { gc, gb, c, ac, ab, b, slack_tags }
    }

    /// The singleton `{p}`.
    pub fn point(p: &[f64]) -> Result<Self> {
        let n = p.len();
        Self::new(
            Matrix::zeros(n, 0),
            Matrix::zeros(n, 0),
            Vector::from_column_slice(p),
            Matrix::zeros(0, 0),
            Matrix::zeros(0, 0),
            Vector::zeros(0),
        )
    }

    pub fn gc(&self) -> &Matrix {
        &self.gc
    }
    pub fn gb(&self) -> &Matrix {
        &self.gb
    }
    pub fn c(&self) -> &Vector {
        &self.c
    }
    pub fn ac(&self) -> &Matrix {
        &self.ac
    }
    pub fn ab(&self) -> &Matrix {
        &self.ab
    }
    pub fn b(&self) -> &Vector {
        &self.b
    }
    pub fn slack_tags(&self) -> &[SlackTag] {
        &self.slack_tags
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.c.len()
    }
    pub fn n_g(&self) -> usize {
        self.gc.ncols()
    }
    pub fn n_b(&self) -> usize {
        self.gb.ncols()
    }
    pub fn n_c(&self) -> usize {
        self.b.len()
    }
    pub fn dims(&self) -> SetDims {
        SetDims::new(self.n_g(), self.n_b(), self.n_c())
    }

    /// Degree-of-freedom order `(n_g + n_b - n_c) / n`.
    pub fn dof_order(&self) -> f64 {
        (self.n_g() as f64 + self.n_b() as f64 - self.n_c() as f64) / self.dim() as f64
    }

    /// The leaf for a full binary assignment: `⟨Gc, c + Gb ξ, Ac, b - Ab ξ⟩`.
    pub fn leaf(&self, xi: &BinaryAssignment) -> Result<ConstrainedZonotope> {
        if xi.len() != self.n_b() {
            return Err(Error::Dimension(format!(
                "binary assignment has length {}, set has {} binary factors",
                xi.len(),
                self.n_b()
            )));
        }
        let v = xi.to_vector();
        ConstrainedZonotope::new(
            self.gc.clone(),
            &self.c + &self.gb * &v,
            self.ac.clone(),
            &self.b - &self.ab * &v,
        )
    }

    /// Branch node at layer `j`: the first `j` binary columns are fixed to `prefix`.
    pub fn branch_node(&self, prefix: &BinaryAssignment, j: usize) -> Result<HybridZonotope> {
        if j > self.n_b() {
            return Err(Error::InvalidArgument(format!(
                "layer {j} exceeds the {} binary factors of the set",
                self.n_b()
            )));
        }
        if prefix.len() != j {
            return Err(Error::Dimension(format!(
                "prefix has length {} but layer is {j}",
                prefix.len()
            )));
        }
        let v = prefix.to_vector();
        let nb = self.n_b();
        let gb_a = self.gb.columns(0, j);
        let ab_a = self.ab.columns(0, j);
        Ok(Self::from_parts(
            self.gc.clone(),
            self.gb.columns(j, nb - j).into_owned(),
            &self.c + gb_a * &v,
            self.ac.clone(),
            self.ab.columns(j, nb - j).into_owned(),
            &self.b - ab_a * &v,
            self.slack_tags.clone(),
        ))
    }

    /// One leaf per entry of `t`, in the order of `t`.
    pub fn decompose(&self, t: &IntegerFeasibleSet) -> Result<Vec<ConstrainedZonotope>> {
        if t.n_b() != self.n_b() {
            return Err(Error::Dimension(format!(
                "integer-feasible set has {} factors, set has {}",
                t.n_b(),
                self.n_b()
            )));
        }
        t.iter().map(|xi| self.leaf(xi)).collect()
    }

    /// `{(z, w) | z ∈ self, w ∈ other}`.
    pub fn cartesian_product(&self, other: &HybridZonotope) -> HybridZonotope {
        let mut tags = self.slack_tags.clone();
        tags.extend(other.slack_tags.iter().map(|t| SlackTag {
            column: t.column + self.n_g(),
            row: t.row + self.n_c(),
        }));
        Self::from_parts(
            linalg::block_diag(&self.gc, &other.gc),
            linalg::block_diag(&self.gb, &other.gb),
            linalg::vcat(&[&self.c, &other.c]),
            linalg::block_diag(&self.ac, &other.ac),
            linalg::block_diag(&self.ab, &other.ab),
            linalg::vcat(&[&self.b, &other.b]),
            tags,
        )
    }

    /// Drops continuous columns and constraint rows, re-indexing slack tags.
    /// Tags whose column or row is dropped disappear.
    pub(crate) fn without(&self, drop_cols: &[usize], drop_rows: &[usize]) -> HybridZonotope {
        let keep_cols: Vec<usize> = (0..self.n_g()).filter(|j| !drop_cols.contains(j)).collect();
        let keep_rows: Vec<usize> = (0..self.n_c()).filter(|i| !drop_rows.contains(i)).collect();
        let col_map = |j: usize| keep_cols.binary_search(&j).ok();
        let row_map = |i: usize| keep_rows.binary_search(&i).ok();
        let tags = self
            .slack_tags
            .iter()
            .filter_map(|t| Some(SlackTag { column: col_map(t.column)?, row: row_map(t.row)? }))
            .collect();
        let ac = linalg::select_rows(&linalg::select_columns(&self.ac, &keep_cols), &keep_rows);
        Self::from_parts(
            linalg::select_columns(&self.gc, &keep_cols),
            self.gb.clone(),
            self.c.clone(),
            ac,
            linalg::select_rows(&self.ab, &keep_rows),
            linalg::select_entries(&self.b, &keep_rows),
            tags,
        )
    }

    /// Replaces the binary blocks (and shifts `c`, `b`), keeping the continuous part.
    pub(crate) fn with_binary_blocks(&self, gb: Matrix, ab: Matrix, c: Vector, b: Vector) -> HybridZonotope {
        Self::from_parts(self.gc.clone(), gb, c, self.ac.clone(), ab, b, self.slack_tags.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&HybridZonotopeJson::from(self)).expect("set serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: HybridZonotopeJson =
            serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        raw.try_into()
    }
}

impl From<Zonotope> for HybridZonotope {
    fn from(z: Zonotope) -> Self {
        ConstrainedZonotope::from(z).into()
    }
}

impl From<ConstrainedZonotope> for HybridZonotope {
    fn from(z: ConstrainedZonotope) -> Self {
        let (n, nc) = (z.c.len(), z.b.len());
        Self::from_parts(z.g, Matrix::zeros(n, 0), z.c, z.a, Matrix::zeros(nc, 0), z.b, Vec::new())
    }
}

/// Wire format: row-major matrices, empty blocks as `[]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridZonotopeJson {
    pub n: usize,
    #[serde(rename = "Gc")]
    pub gc: Vec<Vec<f64>>,
    #[serde(rename = "Gb")]
    pub gb: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    #[serde(rename = "Ac")]
    pub ac: Vec<Vec<f64>>,
    #[serde(rename = "Ab")]
    pub ab: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub slack_tags: Vec<SlackTag>,
}

impl From<&HybridZonotope> for HybridZonotopeJson {
    fn from(z: &HybridZonotope) -> Self {
        Self {
            n: z.dim(),
            gc: linalg::to_rows(&z.gc),
            gb: linalg::to_rows(&z.gb),
            c: z.c.iter().copied().collect(),
            ac: linalg::to_rows(&z.ac),
            ab: linalg::to_rows(&z.ab),
            b: z.b.iter().copied().collect(),
            slack_tags: z.slack_tags.clone(),
        }
    }
}

impl TryFrom<HybridZonotopeJson> for HybridZonotope {
    type Error = Error;

    fn try_from(j: HybridZonotopeJson) -> Result<Self> {
        let width = |g: &[Vec<f64>], a: &[Vec<f64>]| {
            g.first().or_else(|| a.first()).map_or(0, |r| r.len())
        };
        let ng = width(&j.gc, &j.ac);
        let nb = width(&j.gb, &j.ab);
        let nc = j.b.len();
        let bad = |what: &str| Error::Serialization(format!("block {what} has inconsistent shape"));
        if j.c.len() != j.n {
            return Err(bad("c"));
        }
        let gc = linalg::from_rows(&j.gc, j.n, ng).ok_or_else(|| bad("Gc"))?;
        let gb = linalg::from_rows(&j.gb, j.n, nb).ok_or_else(|| bad("Gb"))?;
        let ac = linalg::from_rows(&j.ac, nc, ng).ok_or_else(|| bad("Ac"))?;
        let ab = linalg::from_rows(&j.ab, nc, nb).ok_or_else(|| bad("Ab"))?;
        HybridZonotope::new(gc, gb, Vector::from_vec(j.c), ac, ab, Vector::from_vec(j.b))?
            .with_slack_tags(j.slack_tags)
    }
}

/// A full or partial assignment of binary factors, entries in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct BinaryAssignment(Vec<i8>);

impl BinaryAssignment {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| **v != 1 && **v != -1) {
            return Err(Error::InvalidArgument(format!("binary factor value {v} is not ±1")));
        }
        Ok(Self(values))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn to_vector(&self) -> Vector {
        Vector::from_iterator(self.0.len(), self.0.iter().map(|&v| v as f64))
    }

    pub fn concat(&self, tail: &BinaryAssignment) -> BinaryAssignment {
        let mut v = self.0.clone();
        v.extend_from_slice(&tail.0);
        BinaryAssignment(v)
    }
}

impl TryFrom<Vec<i8>> for BinaryAssignment {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BinaryAssignment> for Vec<i8> {
    fn from(a: BinaryAssignment) -> Self {
        a.0
    }
}

/// The binary assignments whose leaves are nonempty, sorted lexicographically
/// with `-1 < +1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerFeasibleSet {
    n_b: usize,
    entries: Vec<BinaryAssignment>,
}

impl IntegerFeasibleSet {
    pub fn new(n_b: usize, mut entries: Vec<BinaryAssignment>) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| e.len() != n_b) {
            return Err(Error::Dimension(format!(
                "assignment of length {} in a set of {n_b} factors",
                e.len()
            )));
        }
        entries.sort();
        entries.dedup();
        Ok(Self { n_b, entries })
    }

    /// `{()}`: the single empty assignment of a set without binary factors.
    pub fn unit() -> Self {
        Self { n_b: 0, entries: vec![BinaryAssignment::empty()] }
    }

    /// All `2^n_b` assignments.
    pub fn full(n_b: usize) -> Self {
        assert!(n_b < 31, "full enumeration limited to 30 factors");
        let entries = (0..1usize << n_b)
            .map(|mask| {
                BinaryAssignment(
                    (0..n_b).map(|i| if mask >> (n_b - 1 - i) & 1 == 1 { 1 } else { -1 }).collect(),
                )
            })
            .collect();
        Self { n_b, entries }
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BinaryAssignment> {
        self.entries.iter()
    }

    pub fn entries(&self) -> &[BinaryAssignment] {
        &self.entries
    }

    pub fn contains(&self, xi: &BinaryAssignment) -> bool {
        self.entries.binary_search(xi).is_ok()
    }

    /// Entries whose first `prefix.len()` values equal `prefix`, with the prefix stripped.
    pub fn descendants_of(&self, prefix: &BinaryAssignment) -> IntegerFeasibleSet {
        let j = prefix.len();
        let entries = self
            .entries
            .iter()
            .filter(|e| e.0[..j] == prefix.0[..])
            .map(|e| BinaryAssignment(e.0[j..].to_vec()))
            .collect();
        Self { n_b: self.n_b - j, entries }
    }

    /// The `n_b x |T|` matrix whose columns are the entries.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n_b, self.entries.len(), |i, j| self.entries[j].0[i] as f64)
    }
}

impl<'a> IntoIterator for &'a IntegerFeasibleSet {
    type Item = &'a BinaryAssignment;
    type IntoIter = std::slice::Iter<'a, BinaryAssignment>;
    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}
