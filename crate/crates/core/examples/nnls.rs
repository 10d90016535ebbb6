//! Row-wise non-negative least squares on shared normal equations.
//!
//! cargo run --example nnls

use sparse_parafac2::nnls::nnls_rowwise;
use sparse_parafac2::DenseMatrix;

fn main() -> sparse_parafac2::Result<()> {
    // each row solves min_{x >= 0} x G x^T - 2 x b^T
    let g = DenseMatrix::from_rows(&[[2.0, 1.0, 0.0], [1.0, 2.0, 0.5], [0.0, 0.5, 1.0]]);
    let b = DenseMatrix::from_rows(&[[1.0, 1.0, 1.0], [3.0, -2.0, 0.5], [-1.0, -1.0, -1.0]]);
    let x = nnls_rowwise(&g, &b)?;
    for (i, row) in x.rows_iter().enumerate() {
        // gradient G x - b must be >= 0 wherever x = 0, and 0 elsewhere
        let grad: Vec<f64> = (0..3)
            .map(|j| g.row(j).iter().zip(row).map(|(a, c)| a * c).sum::<f64>() - b[(i, j)])
            .collect();
        let grad: Vec<String> = grad.iter().map(|g| format!("{g:.2e}")).collect();
        println!(
            "b = {:?}\n  x = {row:.6?}\n  G x - b = [{}]",
            b.row(i),
            grad.join(", ")
        );
    }
    Ok(())
}
