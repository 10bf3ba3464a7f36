//! Dense block-matrix helpers shared by the set operations.

use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Horizontal concatenation. All blocks must share `rows`.
pub fn hstack(rows: usize, blocks: &[&Matrix]) -> Matrix {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        if b.ncols() > 0 && rows > 0 {
            out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        }
        at += b.ncols();
    }
    out
}

/// Vertical concatenation. All blocks must share `cols`.
pub fn vstack(cols: usize, blocks: &[&Matrix]) -> Matrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        if b.nrows() > 0 && cols > 0 {
            out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        }
        at += b.nrows();
    }
    out
}

pub fn vcat(parts: &[&Vector]) -> Vector {
    let len: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = Vector::zeros(len);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(*p);
        at += p.len();
    }
    out
}

pub fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    if a.nrows() > 0 && a.ncols() > 0 {
        out.view_mut((0, 0), a.shape()).copy_from(a);
    }
    if b.nrows() > 0 && b.ncols() > 0 {
        out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    }
    out
}

/// Keeps the listed columns, in the given order.
pub fn select_columns(m: &Matrix, keep: &[usize]) -> Matrix {
    Matrix::from_fn(m.nrows(), keep.len(), |i, j| m[(i, keep[j])])
}

pub fn select_rows(m: &Matrix, keep: &[usize]) -> Matrix {
    Matrix::from_fn(keep.len(), m.ncols(), |i, j| m[(keep[i], j)])
}

pub fn select_entries(v: &Vector, keep: &[usize]) -> Vector {
    Vector::from_fn(keep.len(), |i, _| v[keep[i]])
}

pub fn is_finite_matrix(m: &Matrix) -> bool {
    m.iter().all(|x| x.is_finite())
}

pub fn is_finite_vector(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Row-major nested representation. Matrices with no rows or no columns become `[]`.
pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Inverse of [`to_rows`]; an empty list yields a `rows x cols` zero-sized block
/// when exactly one of the two extents is known to be zero.
pub fn from_rows(data: &[Vec<f64>], rows: usize, cols: usize) -> Option<Matrix> {
    if data.is_empty() {
        return if rows == 0 || cols == 0 {
            Some(Matrix::zeros(rows, cols))
        } else {
            None
        };
    }
    if data.len() != rows || data.iter().any(|r| r.len() != cols) {
        return None;
    }
    Some(Matrix::from_fn(rows, cols, |i, j| data[i][j]))
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}
