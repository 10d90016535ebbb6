//! MTTKRP kernels for the projected collection `{Y_k}`.
//!
//! The intermediate tensor `Y` is `R x J x K` with frontal slices
//! `Y_k = Q_k^T X_k`. Its three matricized-tensor-times-Khatri-Rao products
//! are computed slice by slice, never forming `Y` or a Khatri-Rao product:
//!
//! * mode 1: `M1 = sum_k (Y_k V) .* W(k,:)` (row-wise Hadamard scaling), `R x R`
//! * mode 2: `M2(j,:) = sum_k (Y_k(:,j)^T H) .* W(k,:)` over non-zero columns `j`, `J x R`
//! * mode 3: `M3(k,:) = dot(H, Y_k V)`, column-wise inner products, `K x R`
//!
//! `Y_k V` only reads the rows of `V` listed in the slice's non-zero
//! columns, so the work per subject is `O(R^2 c_k)`.
//!
//! Modes 1 and 2 are sums over subjects. Subjects are grouped into chunks
//! of roughly equal `sum c_k`; each chunk accumulates privately and chunk
//! results are merged in a fixed binary tree. Chunk boundaries depend only
//! on the data, so the result is bit-identical for any thread count.
//!
//! [`naive_mttkrp`] is the reference: it materializes the dense mode-n
//! matricization and the full Khatri-Rao product and multiplies them.

use std::fmt;
use std::ops::Range;

use rayon::prelude::*;

use crate::dense::{khatri_rao, DenseMatrix};
use crate::error::{Error, Result};
use crate::tensor::{DenseSliceCollection, ProjectedSlice};

/// Target amount of work (non-zero columns, plus one per slice) per chunk.
const CHUNK_WORK: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    pub fn index(self) -> usize {
        match self {
            Mode::One => 1,
            Mode::Two => 2,
            Mode::Three => 3,
        }
    }

    pub fn from_index(n: usize) -> Option<Mode> {
        match n {
            1 => Some(Mode::One),
            2 => Some(Mode::Two),
            3 => Some(Mode::Three),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Operands of one MTTKRP: the projected slices and the three factors
/// `H` (`R x R`), `V` (`J x R`) and `W` (`K x R`).
#[derive(Clone, Copy)]
pub struct MttkrpInput<'a> {
    pub slices: &'a DenseSliceCollection,
    pub h: &'a DenseMatrix,
    pub v: &'a DenseMatrix,
    pub w: &'a DenseMatrix,
}

impl<'a> MttkrpInput<'a> {
    pub fn new(
        slices: &'a DenseSliceCollection,
        h: &'a DenseMatrix,
        v: &'a DenseMatrix,
        w: &'a DenseMatrix,
    ) -> Self {
        MttkrpInput { slices, h, v, w }
    }

    /// Checks all shapes and returns the rank `R`.
    pub fn validate(&self) -> Result<usize> {
        let r = self.slices.n_rows();
        let j = self.slices.n_cols();
        let k = self.slices.n_slices();
        let check = |name: &str, m: &DenseMatrix, rows: usize| {
            if m.shape() != (rows, r) {
                Err(Error::Shape(format!(
                    "{name} is {}x{}, expected {rows}x{r}",
                    m.n_rows(),
                    m.n_cols()
                )))
            } else {
                Ok(())
            }
        };
        check("H", self.h, r)?;
        check("V", self.v, j)?;
        check("W", self.w, k)?;
        Ok(r)
    }
}

/// Dispatches to the specialized kernel for `mode`.
pub fn mttkrp(input: &MttkrpInput<'_>, mode: Mode) -> Result<DenseMatrix> {
    match mode {
        Mode::One => mttkrp_mode1(input),
        Mode::Two => mttkrp_mode2(input),
        Mode::Three => mttkrp_mode3(input),
    }
}

/// `Y_k V` into `out` (`R x R`, row-major), reading only non-zero columns.
#[inline]
fn slice_times_v(slice: &ProjectedSlice, v: &DenseMatrix, r: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (j, col) in slice.columns(r) {
        let vrow = v.row(j);
        for (row, &y) in out.chunks_exact_mut(r).zip(col) {
            for (o, &b) in row.iter_mut().zip(vrow) {
                *o += y * b;
            }
        }
    }
}

/// Mode-1 MTTKRP, `R x R`.
pub fn mttkrp_mode1(input: &MttkrpInput<'_>) -> Result<DenseMatrix> {
    let r = input.validate()?;
    let chunks = work_chunks(input.slices);
    let acc = tree_reduce(&chunks, r * r, &|range, acc| {
        let mut temp = vec![0.0; r * r];
        for k in range {
            slice_times_v(input.slices.slice(k), input.v, r, &mut temp);
            let wk = input.w.row(k);
            for (dst, src) in acc.chunks_exact_mut(r).zip(temp.chunks_exact(r)) {
                for ((d, &t), &s) in dst.iter_mut().zip(src).zip(wk) {
                    *d += t * s;
                }
            }
        }
    });
    DenseMatrix::from_vec(r, r, acc)
}

/// Mode-2 MTTKRP, `J x R`.
pub fn mttkrp_mode2(input: &MttkrpInput<'_>) -> Result<DenseMatrix> {
    let r = input.validate()?;
    let n_cols = input.slices.n_cols();
    let chunks = work_chunks(input.slices);
    let acc = tree_reduce(&chunks, n_cols * r, &|range, acc| {
        let mut temp = vec![0.0; r];
        for k in range {
            let wk = input.w.row(k);
            for (j, col) in input.slices.slice(k).columns(r) {
                // Y_k(:, j)^T H
                temp.iter_mut().for_each(|x| *x = 0.0);
                for (rr, &y) in col.iter().enumerate() {
                    for (t, &hv) in temp.iter_mut().zip(input.h.row(rr)) {
                        *t += y * hv;
                    }
                }
                let dst = &mut acc[j * r..(j + 1) * r];
                for ((d, &t), &s) in dst.iter_mut().zip(&temp).zip(wk) {
                    *d += t * s;
                }
            }
        }
    });
    DenseMatrix::from_vec(n_cols, r, acc)
}

/// Mode-3 MTTKRP, `K x R`. Rows are computed independently.
pub fn mttkrp_mode3(input: &MttkrpInput<'_>) -> Result<DenseMatrix> {
    let r = input.validate()?;
    let mut out = DenseMatrix::zeros(input.slices.n_slices(), r);
    if r == 0 {
        return Ok(out);
    }
    out.as_mut_slice()
        .par_chunks_mut(r)
        .enumerate()
        .with_min_len(64)
        .for_each_init(
            || vec![0.0; r * r],
            |temp, (k, row)| mode3_row_into(input, r, k, temp, row),
        );
    Ok(out)
}

/// A single row `M3(k, :)` of the mode-3 MTTKRP.
pub fn mttkrp_mode3_row(input: &MttkrpInput<'_>, k: usize) -> Result<Vec<f64>> {
    let r = input.validate()?;
    if k >= input.slices.n_slices() {
        return Err(Error::SubjectOutOfRange {
            subject: k,
            count: input.slices.n_slices(),
        });
    }
    let mut temp = vec![0.0; r * r];
    let mut row = vec![0.0; r];
    mode3_row_into(input, r, k, &mut temp, &mut row);
    Ok(row)
}

#[inline]
fn mode3_row_into(input: &MttkrpInput<'_>, r: usize, k: usize, temp: &mut [f64], row: &mut [f64]) {
    slice_times_v(input.slices.slice(k), input.v, r, temp);
    row.iter_mut().for_each(|x| *x = 0.0);
    for (hrow, trow) in input.h.rows_iter().zip(temp.chunks_exact(r)) {
        for ((o, &a), &b) in row.iter_mut().zip(hrow).zip(trow) {
            *o += a * b;
        }
    }
}

/// Splits `0..K` into contiguous ranges of roughly `CHUNK_WORK` units,
/// weighting each slice by its non-zero column count.
fn work_chunks(slices: &DenseSliceCollection) -> Vec<Range<usize>> {
    let mut chunks = Vec::new();
    let mut start = 0;
    let mut work = 0;
    for (k, s) in slices.slices().iter().enumerate() {
        work += s.cols().len() + 1;
        if work >= CHUNK_WORK {
            chunks.push(start..k + 1);
            start = k + 1;
            work = 0;
        }
    }
    if start < slices.n_slices() || chunks.is_empty() {
        chunks.push(start..slices.n_slices());
    }
    chunks
}

/// Runs `kernel` on every chunk with a private zeroed accumulator of length
/// `len`, then sums the accumulators along a fixed binary tree.
fn tree_reduce<F>(chunks: &[Range<usize>], len: usize, kernel: &F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]) + Sync,
{
    match chunks {
        [] => vec![0.0; len],
        [only] => {
            let mut acc = vec![0.0; len];
            kernel(only.clone(), &mut acc);
            acc
        }
        _ => {
            let (left, right) = chunks.split_at(chunks.len() / 2);
            let (mut a, b) = rayon::join(
                || tree_reduce(left, len, kernel),
                || tree_reduce(right, len, kernel),
            );
            for (x, y) in a.iter_mut().zip(&b) {
                *x += y;
            }
            a
        }
    }
}

/// Bytes the naive path needs for `mode`: the dense matricization, the
/// Khatri-Rao product and the output.
pub fn naive_footprint_bytes(k: usize, j: usize, r: usize, mode: Mode) -> u128 {
    let (k, j, r) = (k as u128, j as u128, r as u128);
    let matricized = r * j * k;
    let (kr_rows, out_rows) = match mode {
        Mode::One => (k * j, r),
        Mode::Two => (k * r, j),
        Mode::Three => (j * r, k),
    };
    8 * (matricized + kr_rows * r + out_rows * r)
}

/// Reference MTTKRP: dense matricization times materialized Khatri-Rao product.
pub fn naive_mttkrp(input: &MttkrpInput<'_>, mode: Mode) -> Result<DenseMatrix> {
    let r = input.validate()?;
    let slices = input.slices;
    let (n_slices, n_cols) = (slices.n_slices(), slices.n_cols());
    let (matricized, kr) = match mode {
        Mode::One => {
            // Y_(1)(r, k*J + j) = Y_k(r, j)
            let mut y = DenseMatrix::zeros(r, n_slices * n_cols);
            for (k, s) in slices.slices().iter().enumerate() {
                for (j, col) in s.columns(r) {
                    for (rr, &v) in col.iter().enumerate() {
                        y[(rr, k * n_cols + j)] = v;
                    }
                }
            }
            (y, khatri_rao(input.w, input.v)?)
        }
        Mode::Two => {
            // Y_(2)(j, k*R + r) = Y_k(r, j)
            let mut y = DenseMatrix::zeros(n_cols, n_slices * r);
            for (k, s) in slices.slices().iter().enumerate() {
                for (j, col) in s.columns(r) {
                    for (rr, &v) in col.iter().enumerate() {
                        y[(j, k * r + rr)] = v;
                    }
                }
            }
            (y, khatri_rao(input.w, input.h)?)
        }
        Mode::Three => {
            // Y_(3)(k, j*R + r) = Y_k(r, j)
            let mut y = DenseMatrix::zeros(n_slices, n_cols * r);
            for (k, s) in slices.slices().iter().enumerate() {
                for (j, col) in s.columns(r) {
                    for (rr, &v) in col.iter().enumerate() {
                        y[(k, j * r + rr)] = v;
                    }
                }
            }
            (y, khatri_rao(input.v, input.h)?)
        }
    };
    matricized.matmul(&kr)
}
