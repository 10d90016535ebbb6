#![allow(dead_code)]

use std::ops::RangeInclusive;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparse_parafac2::dense::economy_svd;
use sparse_parafac2::{DenseMatrix, IrregularTensor, SparseSlice};

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn nonneg(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen::<f64>())
}

/// Column-orthonormal `rows x cols` matrix from the polar factor of a Gaussian.
pub fn orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let g = DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
    let svd = economy_svd(&g).unwrap();
    svd.p.matmul(&svd.z.transpose()).unwrap()
}

/// Random sparse slice; with `full_rows` every row gets at least one entry.
pub fn sparse(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    density: f64,
    full_rows: bool,
) -> SparseSlice {
    let mut t = Vec::new();
    for i in 0..rows {
        let before = t.len();
        for j in 0..cols {
            if rng.gen_bool(density) {
                t.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
        if full_rows && t.len() == before {
            t.push((i, rng.gen_range(0..cols), rng.gen_range(0.5..1.0)));
        }
    }
    SparseSlice::from_triplets(rows, cols, t).unwrap()
}

pub fn tensor(
    rng: &mut ChaCha8Rng,
    subjects: usize,
    cols: usize,
    rows: RangeInclusive<usize>,
    density: f64,
    full_rows: bool,
) -> IrregularTensor {
    let slices = (0..subjects)
        .map(|_| {
            let n = rng.gen_range(rows.clone());
            sparse(rng, n, cols, density, full_rows)
        })
        .collect();
    IrregularTensor::new(cols, slices).unwrap()
}

/// `||a - b||_F / ||b||_F`, or the absolute error when `b` is zero.
pub fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let d = a.distance(b);
    let n = b.frobenius_norm();
    if n > 0.0 {
        d / n
    } else {
        d
    }
}
