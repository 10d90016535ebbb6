//! Non-negative least squares in normal-equation form.
//!
//! Each row `b` of the right-hand side is solved independently for
//! `min_{x >= 0} x G x^T - 2 x b^T`, where `G` is the shared cross-product
//! matrix. The active-set iteration follows Bro & de Jong's fast NNLS,
//! which works on `G` and `b` directly instead of the design matrix.

use rayon::prelude::*;

use crate::dense::{cholesky_solve, pinv_small, DenseMatrix};
use crate::error::{Error, Result};

/// Iteration budget per row, as a multiple of the number of unknowns.
pub const DEFAULT_ITER_FACTOR: usize = 30;

/// Dual-feasibility tolerance, relative to `max(1, |b|_inf)`.
pub const KKT_TOL: f64 = 1e-10;

/// Solves every row of `b` against the shared Gram matrix `g`.
pub fn nnls_rowwise(g: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    nnls_rowwise_with_cap(g, b, DEFAULT_ITER_FACTOR * g.n_rows().max(1))
}

pub fn nnls_rowwise_with_cap(
    g: &DenseMatrix,
    b: &DenseMatrix,
    max_iters: usize,
) -> Result<DenseMatrix> {
    let r = g.n_rows();
    if g.n_cols() != r || b.n_cols() != r {
        return Err(Error::Shape(format!(
            "nnls with gram {:?} and right-hand side {:?}",
            g.shape(),
            b.shape()
        )));
    }
    g.ensure_finite("nnls gram")?;
    b.ensure_finite("nnls right-hand side")?;

    let mut out = DenseMatrix::zeros(b.n_rows(), r);
    if r == 0 {
        return Ok(out);
    }
    out.as_mut_slice()
        .par_chunks_mut(r)
        .zip(b.as_slice().par_chunks(r))
        .try_for_each(|(x, rhs)| solve_row(g, rhs, x, max_iters))?;
    Ok(out)
}

/// Active-set solve for one row. `x` must be zeroed on entry.
fn solve_row(g: &DenseMatrix, b: &[f64], x: &mut [f64], max_iters: usize) -> Result<()> {
    let n = b.len();
    let tol = KKT_TOL * b.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut passive = vec![false; n];
    let mut s = vec![0.0; n];
    let mut w = b.to_vec();
    let mut iters = 0;

    loop {
        let next = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = next else { break };
        passive[t] = true;

        loop {
            iters += 1;
            if iters > max_iters {
                return Err(Error::NnlsNoConvergence(max_iters));
            }
            solve_passive(g, b, &passive, &mut s);
            if (0..n).all(|j| !passive[j] || s[j] > 0.0) {
                break;
            }
            // step back towards x until the first passive variable hits zero
            let (blocking, alpha) = (0..n)
                .filter(|&j| passive[j] && s[j] <= 0.0)
                .map(|j| (j, x[j] / (x[j] - s[j])))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("some passive entry is non-positive");
            for j in 0..n {
                x[j] += alpha * (s[j] - x[j]);
                if passive[j] && (j == blocking || x[j] <= 0.0) {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
        x.copy_from_slice(&s);

        for j in 0..n {
            let gx: f64 = g.row(j).iter().zip(x.iter()).map(|(a, c)| a * c).sum();
            w[j] = b[j] - gx;
        }
    }
    Ok(())
}

/// Unconstrained solve restricted to the passive set; other entries are zero.
fn solve_passive(g: &DenseMatrix, b: &[f64], passive: &[bool], s: &mut [f64]) {
    let idx: Vec<usize> = (0..b.len()).filter(|&j| passive[j]).collect();
    s.iter_mut().for_each(|v| *v = 0.0);
    if idx.is_empty() {
        return;
    }
    let m = idx.len();
    let sub = DenseMatrix::from_fn(m, m, |a, c| g[(idx[a], idx[c])]);
    let rhs: Vec<f64> = idx.iter().map(|&j| b[j]).collect();
    let sol = cholesky_solve(&sub, &rhs).unwrap_or_else(|| {
        // singular sub-block: fall back to the minimum-norm solution
        let pinv = pinv_small(&sub).expect("finite square input");
        (0..m)
            .map(|a| (0..m).map(|c| pinv[(a, c)] * rhs[c]).sum())
            .collect()
    });
    for (a, &j) in idx.iter().enumerate() {
        s[j] = sol[a];
    }
}
