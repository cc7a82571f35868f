//! Dense matrices, singular value decomposition, and the pseudo-inverse /
//! pseudo-determinant machinery used by every release and audit.
//!
//! Symmetric inputs are decomposed with a symmetric eigen-solver and the
//! eigen-pairs converted to singular triplets; everything else goes through a
//! general SVD. A singular value counts as zero when it is at most
//! `1e-10 * sigma_max`, with an absolute floor of `1e-12`.

use std::io::{BufRead, Write};
use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Relative rank tolerance applied to the largest singular value.
pub const RANK_RTOL: f64 = 1e-10;
/// Absolute floor on the rank tolerance.
pub const RANK_ATOL: f64 = 1e-12;

const MAX_ITERATIONS: usize = 10_000;
// Convergence threshold of the iterative solvers; tighter values can stall
// the bidiagonal sweep on well-conditioned inputs.
const SOLVER_EPS: f64 = 5.0 * f64::EPSILON;

/// A dense real matrix with at least one row and column and finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix(DMatrix<f64>);

impl Matrix {
    pub fn new(inner: DMatrix<f64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::InvalidMatrix(format!(
                "shape {}x{} is empty",
                inner.nrows(),
                inner.ncols()
            )));
        }
        if let Some(pos) = inner.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at column-major offset {pos}"
            )));
        }
        Ok(Matrix(inner))
    }

    /// Builds a matrix from row-major values.
    pub fn from_row_slice(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: values.len(),
            });
        }
        Matrix::new(DMatrix::from_row_slice(rows, cols, values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                actual: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Matrix::from_row_slice(rows.len(), cols, &flat)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Matrix::new(DMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Matrix::new(DMatrix::zeros(rows, cols))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Matrix::new(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    /// Wraps a matrix produced by internal arithmetic on valid inputs.
    pub(crate) fn wrap(inner: DMatrix<f64>) -> Self {
        debug_assert!(inner.nrows() > 0 && inner.ncols() > 0);
        debug_assert!(inner.iter().all(|v| v.is_finite()));
        Matrix(inner)
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let m = &self.0;
        if m.nrows() != m.ncols() {
            return false;
        }
        let scale = m.amax().max(1.0);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// `x^T M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        if self.0.nrows() != self.0.ncols() || x.len() != self.0.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.0.ncols(),
                actual: x.len(),
            });
        }
        let v = DVector::from_column_slice(x);
        Ok(v.dot(&(&self.0 * &v)))
    }
}

impl Deref for Matrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Thin singular value decomposition `M = U diag(s) V^T`.
///
/// `u` is `m x k`, `v` is `n x k` with `k = min(m, n)`; both have orthonormal
/// columns. Singular values are sorted descending.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
    pub numeric_rank: usize,
}

impl SvdFactors {
    /// Threshold at or below which a singular value is treated as zero.
    pub fn rank_tolerance(&self) -> f64 {
        rank_tolerance(self.singular_values.first().copied().unwrap_or(0.0))
    }

    /// Singular values above the rank tolerance.
    pub fn nonzero_singular_values(&self) -> &[f64] {
        &self.singular_values[..self.numeric_rank]
    }

    pub fn reconstruct(&self) -> Matrix {
        let s = DMatrix::from_diagonal(&DVector::from_row_slice(&self.singular_values));
        Matrix::wrap(&*self.u * s * self.v.transpose())
    }

    /// Columns of `u` belonging to nonzero singular values: an orthonormal basis
    /// of the column space.
    pub fn range_basis(&self) -> DMatrix<f64> {
        self.u.columns(0, self.numeric_rank).into_owned()
    }
}

pub fn rank_tolerance(sigma_max: f64) -> f64 {
    (RANK_RTOL * sigma_max).max(RANK_ATOL)
}

/// Singular value decomposition, routed through the symmetric eigen-solver
/// when `m` is exactly symmetric.
pub fn svd(m: &Matrix) -> Result<SvdFactors> {
    if m.is_symmetric(0.0) {
        symmetric_svd(m)
    } else {
        general_svd(m)
    }
}

fn symmetric_svd(m: &Matrix) -> Result<SvdFactors> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.as_dmatrix().clone(), SOLVER_EPS, MAX_ITERATIONS)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .total_cmp(&eig.eigenvalues[a].abs())
            .then(a.cmp(&b))
    });
    let mut u = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &idx) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        let q = eig.eigenvectors.column(idx);
        let sign = if lambda < 0.0 { -1.0 } else { 1.0 };
        u.set_column(k, &(q * sign));
        v.set_column(k, &q);
        s.push(lambda.abs());
    }
    Ok(finish(u, s, v))
}

fn general_svd(m: &Matrix) -> Result<SvdFactors> {
    let dec = SVD::try_new(m.as_dmatrix().clone(), true, true, SOLVER_EPS, MAX_ITERATIONS)
        .ok_or(Error::NoConvergence)?;
    let u_raw = dec.u.ok_or(Error::NoConvergence)?;
    let vt_raw = dec.v_t.ok_or(Error::NoConvergence)?;
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        dec.singular_values[b]
            .total_cmp(&dec.singular_values[a])
            .then(a.cmp(&b))
    });
    let mut u = DMatrix::zeros(u_raw.nrows(), k);
    let mut v = DMatrix::zeros(vt_raw.ncols(), k);
    let mut s = Vec::with_capacity(k);
    for (slot, &idx) in order.iter().enumerate() {
        u.set_column(slot, &u_raw.column(idx));
        v.set_column(slot, &vt_raw.row(idx).transpose());
        s.push(dec.singular_values[idx].max(0.0));
    }
    Ok(finish(u, s, v))
}

fn finish(u: DMatrix<f64>, s: Vec<f64>, v: DMatrix<f64>) -> SvdFactors {
    let tol = rank_tolerance(s.first().copied().unwrap_or(0.0));
    let numeric_rank = s.iter().filter(|&&x| x > tol).count();
    SvdFactors {
        u: Matrix::wrap(u),
        singular_values: s,
        v: Matrix::wrap(v),
        numeric_rank,
    }
}

/// Moore-Penrose inverse `V diag(1/s) U^T`, zeroing singular values below the
/// rank tolerance.
pub fn pseudo_inverse(f: &SvdFactors) -> Matrix {
    let k = f.numeric_rank;
    let mut out = DMatrix::zeros(f.v.nrows(), f.u.nrows());
    for i in 0..k {
        let vi = f.v.column(i);
        let ui = f.u.column(i);
        out += (vi * ui.transpose()) / f.singular_values[i];
    }
    Matrix::wrap(out)
}

/// Product of the singular values above the rank tolerance; `1` for the zero
/// matrix.
pub fn pseudo_determinant(f: &SvdFactors) -> f64 {
    f.nonzero_singular_values().iter().product()
}

/// Natural log of [`pseudo_determinant`], computed as a sum of logs.
pub fn log_pseudo_determinant(f: &SvdFactors) -> f64 {
    f.nonzero_singular_values().iter().map(|s| s.ln()).sum()
}

/// Eigenvalues of a symmetric matrix in descending order.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_symmetric(1e-12) {
        return Err(Error::InvalidMatrix("matrix is not symmetric".into()));
    }
    let eig = SymmetricEigen::try_new(m.as_dmatrix().clone(), SOLVER_EPS, MAX_ITERATIONS)
        .ok_or(Error::NoConvergence)?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

/// Writes one row per line, comma separated, 17 significant digits.
pub fn write_matrix_csv<W: Write>(out: &mut W, m: &Matrix) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols()).map(|j| format_real(m[(i, j)])).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads the matrix CSV format. Blank lines and lines starting with `#` are
/// skipped.
pub fn read_matrix_csv<R: BufRead>(input: R) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = trimmed
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad number {tok:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no matrix rows".into(),
        });
    }
    Matrix::from_rows(&rows)
}

/// Formats a real with 17 significant digits, enough to round-trip any f64.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}
