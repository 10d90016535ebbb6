//! Seeded synthetic PARAFAC2 data.
//!
//! A random rank-`R_true` model is drawn, each slice `X_k = Q_k H S_k V^T`
//! is formed, and every entry is kept independently with probability
//! `density`. Rows left empty are dropped, so realized row counts grow
//! with density up to `I_max`.
//!
//! All draws come from `ChaCha8Rng` seeded with `seed`: the shared factors
//! use stream 0 and subject `k` uses stream `k + 1`, which keeps the output
//! a pure function of the spec regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{thin_q, DenseMatrix};
use crate::error::{Error, Result};
use crate::tensor::{IrregularTensor, SparseSlice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    /// Number of subjects `K`.
    pub subjects: usize,
    /// Number of variables `J`.
    pub variables: usize,
    /// Maximum observations per subject.
    pub max_rows: usize,
    pub true_rank: usize,
    pub density: f64,
    pub seed: u64,
    pub nonneg_factors: bool,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.subjects == 0 || self.variables == 0 || self.max_rows == 0 {
            return Err(Error::Config("K, J and I_max must all be positive".into()));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Config(format!(
                "density must be in (0, 1], got {}",
                self.density
            )));
        }
        if self.true_rank == 0 || self.true_rank > self.max_rows.min(self.variables) {
            return Err(Error::Config(format!(
                "true rank {} must be in 1..=min(I_max, J) = {}",
                self.true_rank,
                self.max_rows.min(self.variables)
            )));
        }
        Ok(())
    }

    /// Expected number of non-zeros before row filtering.
    pub fn expected_nnz(&self) -> f64 {
        self.subjects as f64 * self.max_rows as f64 * self.variables as f64 * self.density
    }
}

/// Generates the tensor. Subjects whose every entry was dropped are
/// removed, so the result may have fewer than `subjects` slices.
pub fn generate_synthetic(spec: &GeneratorSpec) -> Result<IrregularTensor> {
    spec.validate()?;
    let r = spec.true_rank;
    let mut shared = stream(spec.seed, 0);
    let draw = |rng: &mut ChaCha8Rng| {
        if spec.nonneg_factors {
            rng.gen::<f64>()
        } else {
            rng.gen_range(-1.0..1.0)
        }
    };
    let h = DenseMatrix::from_fn(r, r, |_, _| draw(&mut shared));
    let v = DenseMatrix::from_fn(spec.variables, r, |_, _| draw(&mut shared));
    let gaps = if spec.density < 1.0 {
        Some(Geometric::new(spec.density).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };

    let slices: Vec<Option<SparseSlice>> = (0..spec.subjects)
        .into_par_iter()
        .with_min_len(16)
        .map(|k| {
            let mut rng = stream(spec.seed, k as u64 + 1);
            let s: Vec<f64> = (0..r).map(|_| draw(&mut rng)).collect();
            let q = orthonormal_factor(&mut rng, spec.max_rows, r);
            // U_k S_k = Q_k H diag(s)
            let mut us = q.matmul(&h).expect("Q_k is I_max x R");
            us.scale_columns(&s);
            let entry = |i: usize, j: usize| -> f64 {
                us.row(i).iter().zip(v.row(j)).map(|(a, b)| a * b).sum()
            };

            let mut triplets = Vec::new();
            match &gaps {
                None => {
                    for i in 0..spec.max_rows {
                        for j in 0..spec.variables {
                            triplets.push((i, j, entry(i, j)));
                        }
                    }
                }
                Some(geom) => {
                    let total = (spec.max_rows * spec.variables) as u64;
                    let mut pos = geom.sample(&mut rng);
                    while pos < total {
                        let (i, j) = (
                            (pos / spec.variables as u64) as usize,
                            (pos % spec.variables as u64) as usize,
                        );
                        triplets.push((i, j, entry(i, j)));
                        pos = pos.saturating_add(1).saturating_add(geom.sample(&mut rng));
                    }
                }
            }
            let slice = SparseSlice::from_triplets(spec.max_rows, spec.variables, triplets)
                .expect("generated indices are in range");
            slice.filter_zero_rows().ok().map(|(s, _)| s)
        })
        .collect();

    let slices: Vec<SparseSlice> = slices.into_iter().flatten().collect();
    if slices.is_empty() {
        return Err(Error::Config(
            "density too low: every subject came out empty".into(),
        ));
    }
    IrregularTensor::new(spec.variables, slices)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Orthonormal factor of the thin QR decomposition of a Gaussian matrix.
fn orthonormal_factor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let g = DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng));
    thin_q(&g)
}
