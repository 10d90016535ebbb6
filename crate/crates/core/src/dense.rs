//! Small dense linear algebra used by the solver.
//!
//! Everything here operates on [`DenseMatrix`], a contiguous row-major
//! `f64` matrix. The factor matrices of the model are all small in one
//! dimension (`R` columns, or `R x R`), so these routines favour clarity
//! over blocking tricks. Eigen, singular-value, QR and Cholesky
//! decompositions are delegated to `faer`.

use std::fmt;
use std::ops::{Index, IndexMut};

use faer::prelude::SpSolver;
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff used by [`pinv_small`].
pub const PINV_RTOL: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_elem(rows: usize, cols: usize, value: f64) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from a list of equal-length rows.
    ///
    /// Panics on ragged input; intended for literals in tests and examples.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics, and a zero-column matrix has no data anyway
        self.data
            .chunks_exact(self.cols.max(1))
            .take(if self.cols == 0 { 0 } else { self.rows })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut norms = vec![0.0; self.cols];
        for row in self.rows_iter() {
            for (n, v) in norms.iter_mut().zip(row) {
                *n += v * v;
            }
        }
        norms.iter_mut().for_each(|n| *n = n.sqrt());
        norms
    }

    /// Multiplies column `j` by `factors[j]`.
    pub fn scale_columns(&mut self, factors: &[f64]) {
        assert_eq!(factors.len(), self.cols);
        for i in 0..self.rows {
            for (v, f) in self.row_mut(i).iter_mut().zip(factors) {
                *v *= f;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) {
        assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let lhs = self.row(i);
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (t, &a) in lhs.iter().enumerate() {
                for (d, b) in dst.iter_mut().zip(other.row(t)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * other` without forming the transpose.
    pub fn t_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply ({}x{})^T by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for t in 0..self.rows {
            let rhs = other.row(t);
            for (i, &a) in self.row(t).iter().enumerate() {
                for (d, b) in out.row_mut(i).iter_mut().zip(rhs) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    pub(crate) fn from_faer(m: MatRef<'_, f64>) -> DenseMatrix {
        DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m.read(i, j))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for row in self.rows_iter() {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// Khatri-Rao (column-wise Kronecker) product of `a` (K x R) and `b` (J x R).
///
/// Row `k * J + i` of the result is `b(i, :) * a(k, :)`.
pub fn khatri_rao(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.n_cols() != b.n_cols() {
        return Err(Error::Shape(format!(
            "khatri-rao operands have {} and {} columns",
            a.n_cols(),
            b.n_cols()
        )));
    }
    let r = a.n_cols();
    let mut out = DenseMatrix::zeros(a.n_rows() * b.n_rows(), r);
    for k in 0..a.n_rows() {
        let scale = a.row(k);
        for i in 0..b.n_rows() {
            let dst = out.row_mut(k * b.n_rows() + i);
            for ((d, x), s) in dst.iter_mut().zip(b.row(i)).zip(scale) {
                *d = x * s;
            }
        }
    }
    Ok(out)
}

/// Gram matrix `a^T a`, symmetrized exactly.
pub fn gram(a: &DenseMatrix) -> DenseMatrix {
    let n = a.n_cols();
    let mut g = DenseMatrix::zeros(n, n);
    for row in a.rows_iter() {
        for i in 0..n {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..n {
                g[(i, j)] += ri * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
    g
}

pub fn hadamard(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "hadamard of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
    Ok(DenseMatrix {
        rows: a.rows,
        cols: a.cols,
        data,
    })
}

/// Moore-Penrose pseudoinverse of a small symmetric positive semidefinite
/// matrix, via its eigendecomposition. Eigenvalues at or below
/// `PINV_RTOL * max_eigenvalue` are treated as zero.
pub fn pinv_small(g: &DenseMatrix) -> Result<DenseMatrix> {
    let n = g.n_rows();
    if n != g.n_cols() {
        return Err(Error::Shape(format!(
            "pseudoinverse needs a square matrix, got {}x{}",
            g.n_rows(),
            g.n_cols()
        )));
    }
    g.ensure_finite("pseudoinverse input")?;
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    let (values, vectors) = symmetric_eigen(g);
    let max = values.iter().fold(0.0_f64, |m, &v| m.max(v));
    let mut out = DenseMatrix::zeros(n, n);
    if max <= 0.0 {
        return Ok(out);
    }
    let cutoff = PINV_RTOL * max;
    for (t, &lambda) in values.iter().enumerate() {
        if lambda <= cutoff {
            continue;
        }
        let inv = 1.0 / lambda;
        for i in 0..n {
            let vi = vectors[(i, t)] * inv;
            for j in 0..n {
                out[(i, j)] += vi * vectors[(j, t)];
            }
        }
    }
    Ok(out)
}

/// Eigenvalues (non-decreasing) and eigenvectors (columns) of the
/// symmetric part of a square matrix.
pub(crate) fn symmetric_eigen(g: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = g.n_rows();
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
    let eig = sym.selfadjoint_eigendecomposition(Side::Lower);
    let values = (0..n).map(|i| eig.s().column_vector().read(i)).collect();
    (values, DenseMatrix::from_faer(eig.u()))
}

/// Solves `a x = b` for symmetric positive definite `a`; `None` if the
/// Cholesky factorization breaks down.
pub(crate) fn cholesky_solve(a: &DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let chol = a.to_faer().cholesky(Side::Lower).ok()?;
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = chol.solve(&rhs);
    let out: Vec<f64> = (0..b.len()).map(|i| x.read(i, 0)).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Orthonormal factor of the thin QR decomposition, `rows x min(rows, cols)`.
pub(crate) fn thin_q(m: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_faer(m.to_faer().qr().compute_thin_q().as_ref())
}

/// Economy SVD `m = p * diag(sigma) * z^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors, `rows x rho`.
    pub p: DenseMatrix,
    /// Singular values, non-increasing, length `rho`.
    pub sigma: Vec<f64>,
    /// Right singular vectors, `cols x rho`.
    pub z: DenseMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut ps = self.p.clone();
        ps.scale_columns(&self.sigma);
        ps.matmul(&self.z.transpose())
            .expect("svd factors have consistent shapes")
    }
}

/// Economy singular value decomposition with `rho = min(rows, cols)`.
pub fn economy_svd(m: &DenseMatrix) -> Result<Svd> {
    m.ensure_finite("svd input")?;
    let (rows, cols) = m.shape();
    let rho = rows.min(cols);
    if rho == 0 {
        return Ok(Svd {
            p: DenseMatrix::zeros(rows, 0),
            sigma: Vec::new(),
            z: DenseMatrix::zeros(cols, 0),
        });
    }
    let svd = m.to_faer().thin_svd();
    let sigma: Vec<f64> = (0..rho).map(|i| svd.s_diagonal().read(i)).collect();
    if sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("svd"));
    }
    Ok(Svd {
        p: DenseMatrix::from_faer(svd.u()),
        sigma,
        z: DenseMatrix::from_faer(svd.v()),
    })
}
