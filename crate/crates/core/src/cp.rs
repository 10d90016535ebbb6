//! One CP-ALS sweep over the projected collection `{Y_k}`.

use crate::dense::{gram, hadamard, pinv_small, DenseMatrix};
use crate::error::{Error, Result};
use crate::mttkrp::{mttkrp_mode1, mttkrp_mode2, mttkrp_mode3, MttkrpInput};
use crate::nnls::nnls_rowwise;
use crate::tensor::DenseSliceCollection;

/// CP factors of the `R x J x K` tensor `Y`: `H` (`R x R`), `V` (`J x R`),
/// `W` (`K x R`). `H` and `V` carry unit-norm columns after a sweep; all
/// scale lives in `W`, and `lambda` records the column norms of `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpFactors {
    pub h: DenseMatrix,
    pub v: DenseMatrix,
    pub w: DenseMatrix,
    pub lambda: Vec<f64>,
}

impl CpFactors {
    pub fn new(h: DenseMatrix, v: DenseMatrix, w: DenseMatrix) -> Result<Self> {
        let r = h.n_rows();
        if h.n_cols() != r || v.n_cols() != r || w.n_cols() != r {
            return Err(Error::Shape(format!(
                "CP factors H {:?}, V {:?}, W {:?} disagree on rank",
                h.shape(),
                v.shape(),
                w.shape()
            )));
        }
        let lambda = w.column_norms();
        Ok(CpFactors { h, v, w, lambda })
    }

    pub fn rank(&self) -> usize {
        self.h.n_rows()
    }
}

/// Result of a sweep: the new factors plus the mode-3 MTTKRP evaluated at
/// the final `H` and `V`, which the outer loop reuses for its residual.
#[derive(Debug, Clone)]
pub struct CpSweep {
    pub factors: CpFactors,
    pub mode3: DenseMatrix,
}

/// Runs one ALS sweep `H -> V -> W`. With `nonneg`, `V` and `W` are solved
/// by NNLS; `H` is always unconstrained.
pub fn cp_als_iteration(
    slices: &DenseSliceCollection,
    factors: &CpFactors,
    nonneg: bool,
) -> Result<CpFactors> {
    cp_als_sweep(slices, factors, nonneg).map(|s| s.factors)
}

pub fn cp_als_sweep(
    slices: &DenseSliceCollection,
    factors: &CpFactors,
    nonneg: bool,
) -> Result<CpSweep> {
    let mut h = factors.h.clone();
    let mut v = factors.v.clone();
    let mut w = factors.w.clone();
    MttkrpInput::new(slices, &h, &v, &w).validate()?;

    let m1 = mttkrp_mode1(&MttkrpInput::new(slices, &h, &v, &w))?;
    h = m1.matmul(&pinv_small(&hadamard(&gram(&w), &gram(&v))?)?)?;
    absorb_column_norms(&mut h, &mut w);

    let m2 = mttkrp_mode2(&MttkrpInput::new(slices, &h, &v, &w))?;
    let g = hadamard(&gram(&w), &gram(&h))?;
    v = solve(&g, &m2, nonneg)?;
    absorb_column_norms(&mut v, &mut w);

    let m3 = mttkrp_mode3(&MttkrpInput::new(slices, &h, &v, &w))?;
    let g = hadamard(&gram(&v), &gram(&h))?;
    w = solve(&g, &m3, nonneg)?;

    h.ensure_finite("CP factor H")?;
    v.ensure_finite("CP factor V")?;
    w.ensure_finite("CP factor W")?;
    Ok(CpSweep {
        factors: CpFactors::new(h, v, w)?,
        mode3: m3,
    })
}

fn solve(g: &DenseMatrix, mttkrp: &DenseMatrix, nonneg: bool) -> Result<DenseMatrix> {
    if nonneg {
        nnls_rowwise(g, mttkrp)
    } else {
        mttkrp.matmul(&pinv_small(g)?)
    }
}

/// Normalizes the columns of `m` to unit length and multiplies the
/// matching columns of `w` by the removed norms. Zero columns stay zero.
fn absorb_column_norms(m: &mut DenseMatrix, w: &mut DenseMatrix) {
    let norms = m.column_norms();
    let inv: Vec<f64> = norms
        .iter()
        .map(|&n| if n > 0.0 { 1.0 / n } else { 1.0 })
        .collect();
    let keep: Vec<f64> = norms
        .iter()
        .map(|&n| if n > 0.0 { n } else { 1.0 })
        .collect();
    m.scale_columns(&inv);
    w.scale_columns(&keep);
}

/// CP objective `sum_k ||Y_k - H diag(W(k,:)) V^T||_F^2`, evaluated without
/// densifying the model: `||Y||^2 - 2 <Y_k, H S_k V^T> + w_k (H^T H .* V^T V) w_k^T`.
pub fn cp_objective(slices: &DenseSliceCollection, factors: &CpFactors) -> Result<f64> {
    let m3 = mttkrp_mode3(&MttkrpInput::new(
        slices, &factors.h, &factors.v, &factors.w,
    ))?;
    let data_sq: f64 = slices
        .slices()
        .iter()
        .map(|s| s.values().iter().map(|v| v * v).sum::<f64>())
        .sum();
    let cross = hadamard(&gram(&factors.h), &gram(&factors.v))?;
    Ok(data_sq + model_terms(&factors.w, &m3, &cross))
}

/// `sum_k ( w_k C w_k^T - 2 w_k . m3_k )`.
pub(crate) fn model_terms(w: &DenseMatrix, m3: &DenseMatrix, cross: &DenseMatrix) -> f64 {
    let r = w.n_cols();
    let mut total = 0.0;
    for (wk, mk) in w.rows_iter().zip(m3.rows_iter()) {
        let mut quad = 0.0;
        for a in 0..r {
            let ca = cross.row(a);
            let mut inner = 0.0;
            for b in 0..r {
                inner += ca[b] * wk[b];
            }
            quad += wk[a] * inner;
        }
        let lin: f64 = wk.iter().zip(mk).map(|(a, b)| a * b).sum();
        total += quad - 2.0 * lin;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen::<f64>())
    }

    /// Dense evaluation of the CP objective.
    fn direct_objective(ys: &[DenseMatrix], f: &CpFactors) -> f64 {
        ys.iter()
            .enumerate()
            .map(|(k, y)| {
                let mut hs = f.h.clone();
                hs.scale_columns(f.w.row(k));
                let model = hs.matmul(&f.v.transpose()).unwrap();
                y.distance(&model).powi(2)
            })
            .sum()
    }

    fn random_slices(rng: &mut ChaCha8Rng, k: usize, r: usize, j: usize) -> Vec<DenseMatrix> {
        (0..k)
            .map(|_| {
                let mut y = random(rng, r, j);
                for c in 0..j {
                    if rng.gen_bool(0.4) {
                        for rr in 0..r {
                            y[(rr, c)] = 0.0;
                        }
                    }
                }
                y
            })
            .collect()
    }

    #[test]
    fn objective_matches_dense_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let ys = random_slices(&mut rng, 6, 3, 7);
            let coll = DenseSliceCollection::from_dense(&ys).unwrap();
            let f = CpFactors::new(
                random(&mut rng, 3, 3),
                random(&mut rng, 7, 3),
                random(&mut rng, 6, 3),
            )
            .unwrap();
            let fast = cp_objective(&coll, &f).unwrap();
            let slow = direct_objective(&ys, &f);
            assert!(
                (fast - slow).abs() <= 1e-10 * slow.max(1.0),
                "{fast} vs {slow}"
            );
        }
    }

    #[test]
    fn exact_factors_are_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (r, j, k) = (3, 8, 5);
        let mut h = uniform(&mut rng, r, r);
        let mut v = uniform(&mut rng, j, r);
        let mut w = uniform(&mut rng, k, r);
        absorb_column_norms(&mut h, &mut w);
        absorb_column_norms(&mut v, &mut w);
        let truth = CpFactors::new(h, v, w).unwrap();
        let ys: Vec<DenseMatrix> = (0..k)
            .map(|kk| {
                let mut hs = truth.h.clone();
                hs.scale_columns(truth.w.row(kk));
                hs.matmul(&truth.v.transpose()).unwrap()
            })
            .collect();
        let coll = DenseSliceCollection::from_dense(&ys).unwrap();
        for nonneg in [false, true] {
            let next = cp_als_iteration(&coll, &truth, nonneg).unwrap();
            assert!(direct_objective(&ys, &next) <= 1e-18, "nonneg={nonneg}");
            assert!(next.h.distance(&truth.h) < 1e-9);
            assert!(next.v.distance(&truth.v) < 1e-9);
            assert!(next.w.distance(&truth.w) < 1e-9);
        }
    }

    #[test]
    fn rank_one_single_slice_closed_form() {
        // y = h w v^T with h scalar: after one sweep h = +-1, v = y/|y| up to
        // sign, and the product reproduces y exactly.
        let y = DenseMatrix::from_rows(&[[3.0, 0.0, -4.0, 1.0]]);
        let coll = DenseSliceCollection::from_dense(std::slice::from_ref(&y)).unwrap();
        let start = CpFactors::new(
            DenseMatrix::from_rows(&[[0.5]]),
            DenseMatrix::from_rows(&[[1.0], [2.0], [0.5], [1.0]]),
            DenseMatrix::from_rows(&[[2.0]]),
        )
        .unwrap();
        let out = cp_als_iteration(&coll, &start, false).unwrap();
        let h = out.h[(0, 0)];
        let w = out.w[(0, 0)];
        assert!((h.abs() - 1.0).abs() < 1e-12);
        let ynorm = y.frobenius_norm();
        // y . v0 = 3 - 2 + 1 = 2 > 0 so h = +1, v = y / |y|, w = |y|
        assert!((h - 1.0).abs() < 1e-12);
        assert!((w - ynorm).abs() < 1e-12);
        for c in 0..4 {
            assert!((out.v[(c, 0)] - y[(0, c)] / ynorm).abs() < 1e-12);
            assert!((h * w * out.v[(c, 0)] - y[(0, c)]).abs() < 1e-12);
        }
        assert!((out.lambda[0] - ynorm).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_monotone_and_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..50 {
            let r = 1 + trial % 4;
            let (j, k) = (4 + trial % 7, 2 + trial % 9);
            let ys = random_slices(&mut rng, k, r, j);
            let coll = DenseSliceCollection::from_dense(&ys).unwrap();
            let start = CpFactors::new(
                uniform(&mut rng, r, r),
                uniform(&mut rng, j, r),
                uniform(&mut rng, k, r),
            )
            .unwrap();
            for nonneg in [false, true] {
                let before = direct_objective(&ys, &start);
                let next = cp_als_iteration(&coll, &start, nonneg).unwrap();
                let after = direct_objective(&ys, &next);
                assert!(
                    after <= before + 1e-9 * before,
                    "trial {trial}: {before} -> {after}"
                );
                for norm in next
                    .h
                    .column_norms()
                    .into_iter()
                    .chain(next.v.column_norms())
                {
                    assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-12);
                }
                if nonneg {
                    assert!(next.v.as_slice().iter().all(|&x| x >= 0.0));
                    assert!(next.w.as_slice().iter().all(|&x| x >= 0.0));
                }
            }
        }
    }

    #[test]
    fn rejects_inconsistent_factors() {
        assert!(CpFactors::new(
            DenseMatrix::identity(2),
            DenseMatrix::zeros(3, 1),
            DenseMatrix::zeros(1, 2)
        )
        .is_err());
        let coll = DenseSliceCollection::from_dense(&[DenseMatrix::zeros(2, 3)]).unwrap();
        let f = CpFactors::new(
            DenseMatrix::identity(2),
            DenseMatrix::zeros(4, 2),
            DenseMatrix::zeros(1, 2),
        )
        .unwrap();
        assert!(cp_als_iteration(&coll, &f, false).is_err());
    }
}
