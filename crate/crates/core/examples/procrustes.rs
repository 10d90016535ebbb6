//! One orthogonal Procrustes update for a single sparse slice.
//!
//! cargo run --example procrustes

use sparse_parafac2::dense::gram;
use sparse_parafac2::parafac2::procrustes_update;
use sparse_parafac2::{DenseMatrix, SparseSlice};

fn objective(x: &DenseMatrix, q: &DenseMatrix, h: &DenseMatrix, s: &[f64], v: &DenseMatrix) -> f64 {
    let mut qhs = q.matmul(h).unwrap();
    qhs.scale_columns(s);
    x.distance(&qhs.matmul(&v.transpose()).unwrap()).powi(2)
}

fn main() -> sparse_parafac2::Result<()> {
    // 4 x 5 slice with two empty columns
    let x = SparseSlice::from_triplets(
        4,
        5,
        [
            (0, 0, 1.0),
            (0, 3, 0.5),
            (1, 1, 2.0),
            (2, 0, -1.0),
            (2, 3, 0.25),
            (3, 1, 0.75),
        ],
    )?;
    let h = DenseMatrix::from_rows(&[[1.0, 0.2], [0.1, 1.0]]);
    let s = [1.5, 0.8];
    let v = DenseMatrix::from_rows(&[[0.9, 0.1], [0.2, 0.8], [0.3, 0.3], [0.5, 0.0], [0.1, 0.4]]);

    let q = procrustes_update(&x, &h, &s, &v)?;
    println!("Q =\n{q:?}");
    println!("Q^T Q =\n{:?}", gram(&q));

    let dense = x.to_dense();
    let optimum = objective(&dense, &q, &h, &s, &v);
    // any other orthonormal Q does no better, e.g. the first two unit vectors
    let e = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
    println!(
        "objective at Q: {optimum:.6}, at [e1 e2]: {:.6}",
        objective(&dense, &e, &h, &s, &v)
    );
    Ok(())
}
