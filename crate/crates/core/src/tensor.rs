//! Irregular tensors: a collection of sparse slices `X_k` (`I_k x J`) that
//! share the column mode, and the projected collection `Y_k = Q_k^T X_k`.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// One subject's sparse `I_k x J` matrix, stored by non-zero column.
///
/// Only columns holding at least one entry are represented, so memory is
/// proportional to the number of non-zeros rather than to `J`. Entries are
/// sorted by column, then by row; explicit zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSlice {
    n_rows: usize,
    n_cols: usize,
    nnz_cols: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSlice {
    /// Builds a slice from `(row, col, value)` triplets. Duplicate
    /// positions are summed; entries that end up exactly zero are dropped.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::Shape(format!(
                    "entry ({i}, {j}) outside a {n_rows}x{n_cols} slice"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("slice entry"));
            }
            entries.push((j, i, v));
        }
        entries.sort_by_key(|e| (e.0, e.1));

        let mut slice = SparseSlice {
            n_rows,
            n_cols,
            nnz_cols: Vec::new(),
            col_ptr: vec![0],
            row_idx: Vec::with_capacity(entries.len()),
            values: Vec::with_capacity(entries.len()),
        };
        let mut iter = entries.into_iter().peekable();
        while let Some((j, i, mut v)) = iter.next() {
            while let Some(&(j2, i2, v2)) = iter.peek() {
                if (j2, i2) != (j, i) {
                    break;
                }
                v += v2;
                iter.next();
            }
            if v == 0.0 {
                continue;
            }
            if slice.nnz_cols.last() != Some(&j) {
                if !slice.nnz_cols.is_empty() {
                    slice.col_ptr.push(slice.row_idx.len());
                }
                slice.nnz_cols.push(j);
            }
            slice.row_idx.push(i);
            slice.values.push(v);
        }
        if !slice.nnz_cols.is_empty() {
            slice.col_ptr.push(slice.row_idx.len());
        }
        Ok(slice)
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let triplets = (0..m.n_rows())
            .flat_map(|i| (0..m.n_cols()).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, m[(i, j)]));
        Self::from_triplets(m.n_rows(), m.n_cols(), triplets).expect("dense entries are in range")
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Sorted indices of the columns holding at least one non-zero.
    #[inline]
    pub fn nnz_cols(&self) -> &[usize] {
        &self.nnz_cols
    }

    /// Non-zero columns as `(column, rows, values)`, in ascending column order.
    pub fn columns(&self) -> impl Iterator<Item = (usize, &[usize], &[f64])> + '_ {
        self.nnz_cols.iter().enumerate().map(move |(t, &j)| {
            let span = self.col_ptr[t]..self.col_ptr[t + 1];
            (j, &self.row_idx[span.clone()], &self.values[span])
        })
    }

    /// All entries as `(row, col, value)` in storage order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.columns()
            .flat_map(|(j, rows, vals)| rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v)))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Recomputes the sorted non-zero column list from the stored entries.
    pub fn nonzero_columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = self
            .triplets()
            .filter(|&(_, _, v)| v != 0.0)
            .map(|(_, j, _)| j)
            .collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Drops all-zero rows, returning the compacted slice and, for each new
    /// row, its index in the original slice.
    pub fn filter_zero_rows(&self) -> Result<(SparseSlice, Vec<usize>)> {
        if self.nnz() == 0 {
            return Err(Error::EmptySlice);
        }
        let mut occupied = vec![false; self.n_rows];
        for &i in &self.row_idx {
            occupied[i] = true;
        }
        let row_map: Vec<usize> = (0..self.n_rows).filter(|&i| occupied[i]).collect();
        let mut new_index = vec![usize::MAX; self.n_rows];
        for (new, &old) in row_map.iter().enumerate() {
            new_index[old] = new;
        }
        let mut out = self.clone();
        out.n_rows = row_map.len();
        out.row_idx.iter_mut().for_each(|i| *i = new_index[*i]);
        Ok((out, row_map))
    }

    /// `X_k * V` as a dense `I_k x R` matrix, touching only non-zero columns.
    pub fn times_dense(&self, v: &DenseMatrix) -> Result<DenseMatrix> {
        if v.n_rows() != self.n_cols {
            return Err(Error::Shape(format!(
                "slice with {} columns times {}x{} matrix",
                self.n_cols,
                v.n_rows(),
                v.n_cols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, v.n_cols());
        for (j, rows, vals) in self.columns() {
            let vrow = v.row(j);
            for (&i, &x) in rows.iter().zip(vals) {
                for (d, b) in out.row_mut(i).iter_mut().zip(vrow) {
                    *d += x * b;
                }
            }
        }
        Ok(out)
    }
}

/// The collection `{X_k}`, `k = 0..K`, with a shared column count `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrregularTensor {
    n_cols: usize,
    slices: Vec<SparseSlice>,
    total_nnz: usize,
}

impl IrregularTensor {
    pub fn new(n_cols: usize, slices: Vec<SparseSlice>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::Shape(
                "an irregular tensor needs at least one slice".into(),
            ));
        }
        if let Some((k, s)) = slices
            .iter()
            .enumerate()
            .find(|(_, s)| s.n_cols() != n_cols)
        {
            return Err(Error::Shape(format!(
                "slice {k} has {} columns, expected {n_cols}",
                s.n_cols()
            )));
        }
        let total_nnz = slices.iter().map(SparseSlice::nnz).sum();
        Ok(IrregularTensor {
            n_cols,
            slices,
            total_nnz,
        })
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    #[inline]
    pub fn slices(&self) -> &[SparseSlice] {
        &self.slices
    }

    #[inline]
    pub fn slice(&self, k: usize) -> &SparseSlice {
        &self.slices[k]
    }

    #[inline]
    pub fn total_nnz(&self) -> usize {
        self.total_nnz
    }

    pub fn max_rows(&self) -> usize {
        self.slices
            .iter()
            .map(SparseSlice::n_rows)
            .max()
            .unwrap_or(0)
    }

    pub fn min_rows(&self) -> usize {
        self.slices
            .iter()
            .map(SparseSlice::n_rows)
            .min()
            .unwrap_or(0)
    }

    /// Sum of squared stored values, accumulated slice by slice in storage order.
    pub fn frobenius_sq(&self) -> f64 {
        let mut total = 0.0;
        for s in &self.slices {
            for v in s.values() {
                total += v * v;
            }
        }
        total
    }

    /// Removes all-zero rows from every slice. Returns the filtered tensor
    /// and the number of rows removed. Fails on the first empty subject.
    pub fn filter_zero_rows(&self) -> Result<(IrregularTensor, usize)> {
        let mut removed = 0;
        let mut slices = Vec::with_capacity(self.slices.len());
        for (k, s) in self.slices.iter().enumerate() {
            let (filtered, _) = s.filter_zero_rows().map_err(|e| match e {
                Error::EmptySlice => Error::EmptySubject(k),
                other => other,
            })?;
            removed += s.n_rows() - filtered.n_rows();
            slices.push(filtered);
        }
        Ok((IrregularTensor::new(self.n_cols, slices)?, removed))
    }

    pub fn into_slices(self) -> Vec<SparseSlice> {
        self.slices
    }
}

/// A projected slice `Y_k` (`R x J`) stored as its non-zero columns only:
/// `values` holds `c_k` contiguous columns of length `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSlice {
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl ProjectedSlice {
    #[inline]
    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    /// Packed column data, column-major, `R * c_k` values.
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column index, R values)` pairs.
    pub fn columns(&self, rank: usize) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        self.cols
            .iter()
            .copied()
            .zip(self.values.chunks_exact(rank.max(1)))
    }
}

/// The intermediate collection `{Y_k}`: K slices of size `R x J` whose only
/// non-zero columns are those of the source `X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSliceCollection {
    rank: usize,
    n_cols: usize,
    slices: Vec<ProjectedSlice>,
}

impl DenseSliceCollection {
    /// Builds a collection from packed parts `(nnz_cols, R * c_k values)`.
    pub fn from_packed(
        rank: usize,
        n_cols: usize,
        parts: Vec<(Vec<usize>, Vec<f64>)>,
    ) -> Result<Self> {
        let mut slices = Vec::with_capacity(parts.len());
        for (k, (cols, values)) in parts.into_iter().enumerate() {
            if values.len() != rank * cols.len() {
                return Err(Error::Shape(format!(
                    "projected slice {k}: {} values for {} columns of height {rank}",
                    values.len(),
                    cols.len()
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.last().is_some_and(|&j| j >= n_cols) {
                return Err(Error::Shape(format!(
                    "projected slice {k}: column list not sorted or out of range"
                )));
            }
            slices.push(ProjectedSlice { cols, values });
        }
        Ok(DenseSliceCollection {
            rank,
            n_cols,
            slices,
        })
    }

    /// Packs dense `R x J` matrices, keeping every column with a non-zero.
    pub fn from_dense(slices: &[DenseMatrix]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::Shape("empty slice collection".into()))?;
        let (rank, n_cols) = first.shape();
        let mut parts = Vec::with_capacity(slices.len());
        for (k, y) in slices.iter().enumerate() {
            if y.shape() != (rank, n_cols) {
                return Err(Error::Shape(format!(
                    "slice {k} is {:?}, expected {:?}",
                    y.shape(),
                    (rank, n_cols)
                )));
            }
            let mut cols = Vec::new();
            let mut values = Vec::new();
            for j in 0..n_cols {
                let col = y.column(j);
                if col.iter().any(|&v| v != 0.0) {
                    cols.push(j);
                    values.extend(col);
                }
            }
            parts.push((cols, values));
        }
        Self::from_packed(rank, n_cols, parts)
    }

    /// Height `R` of every slice.
    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    #[inline]
    pub fn slices(&self) -> &[ProjectedSlice] {
        &self.slices
    }

    #[inline]
    pub fn slice(&self, k: usize) -> &ProjectedSlice {
        &self.slices[k]
    }

    /// Total stored values, `R * sum_k c_k`.
    pub fn stored_values(&self) -> usize {
        self.slices.iter().map(|s| s.values.len()).sum()
    }

    /// Densified `Y_k` as an `R x J` matrix.
    pub fn to_dense(&self, k: usize) -> DenseMatrix {
        let mut y = DenseMatrix::zeros(self.rank, self.n_cols);
        for (j, col) in self.slices[k].columns(self.rank) {
            for (r, &v) in col.iter().enumerate() {
                y[(r, j)] = v;
            }
        }
        y
    }

    /// Columns of `Y_k` that hold a non-zero value.
    pub fn nonzero_columns(&self, k: usize) -> Vec<usize> {
        self.slices[k]
            .columns(self.rank)
            .filter(|(_, col)| col.iter().any(|&v| v != 0.0))
            .map(|(j, _)| j)
            .collect()
    }
}
