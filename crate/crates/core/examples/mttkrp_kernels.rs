//! Slice-wise MTTKRP kernels against the materialized Khatri-Rao reference.
//!
//! cargo run --release --example mttkrp_kernels

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_parafac2::mttkrp::{mttkrp, naive_footprint_bytes, naive_mttkrp, Mode, MttkrpInput};
use sparse_parafac2::parafac2::{procrustes_update, project_slices};
use sparse_parafac2::synth::{generate_synthetic, GeneratorSpec};
use sparse_parafac2::DenseMatrix;

fn main() -> sparse_parafac2::Result<()> {
    let x = generate_synthetic(&GeneratorSpec {
        subjects: 2000,
        variables: 500,
        max_rows: 30,
        true_rank: 8,
        density: 0.01,
        seed: 1,
        nonneg_factors: true,
    })?;
    let r = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut random = |rows| DenseMatrix::from_fn(rows, r, |_, _| rng.gen::<f64>());
    let (h, v, w) = (random(r), random(x.n_cols()), random(x.n_slices()));

    // Y_k = Q_k^T X_k with Q_k from one Procrustes step
    let q = x
        .slices()
        .iter()
        .enumerate()
        .map(|(k, xk)| procrustes_update(xk, &h, w.row(k), &v))
        .collect::<Result<Vec<_>, _>>()?;
    let y = project_slices(&x, &q)?;
    println!(
        "nnz(X) = {}, stored values of Y = {} (dense Y would be {})",
        x.total_nnz(),
        y.stored_values(),
        r * x.n_cols() * x.n_slices()
    );

    let input = MttkrpInput::new(&y, &h, &v, &w);
    for mode in Mode::ALL {
        let t = Instant::now();
        let fast = mttkrp(&input, mode)?;
        let fast_ms = t.elapsed().as_secs_f64() * 1e3;
        let t = Instant::now();
        let slow = naive_mttkrp(&input, mode)?;
        let slow_ms = t.elapsed().as_secs_f64() * 1e3;
        println!(
            "mode {mode}: {:?} output, relative difference {:.1e}, specialized {fast_ms:.2} ms, naive {slow_ms:.2} ms ({:.1} MB materialized)",
            fast.shape(),
            fast.distance(&slow) / slow.frobenius_norm(),
            naive_footprint_bytes(x.n_slices(), x.n_cols(), r, mode) as f64 / 1e6
        );
    }
    Ok(())
}
