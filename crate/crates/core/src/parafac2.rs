//! PARAFAC2 alternating least squares.
//!
//! Each slice is modelled as `X_k ~ Q_k H S_k V^T` with column-orthonormal
//! `Q_k`, a shared `R x R` matrix `H`, diagonal `S_k` and shared `V`. An
//! outer iteration
//!
//! 1. solves an orthogonal Procrustes problem per subject for `Q_k`,
//! 2. projects the data, `Y_k = Q_k^T X_k` (only non-zero columns survive),
//! 3. runs one CP-ALS sweep on `{Y_k}` for `H`, `V` and `W`,
//! 4. sets `S_k = diag(W(k,:))`.
//!
//! The residual `sum_k ||X_k - U_k S_k V^T||^2` is tracked through the
//! identity `||X_k||^2 - 2 <Y_k, H S_k V^T> + w_k (H^T H .* V^T V) w_k^T`,
//! which never forms a dense `I_k x J` model slice.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cp::{cp_als_sweep, model_terms, CpFactors};
use crate::dense::{economy_svd, gram, hadamard, symmetric_eigen, DenseMatrix};
use crate::error::{Error, Result};
use crate::tensor::{DenseSliceCollection, IrregularTensor, SparseSlice};

/// Name of the pseudo-random generator used for every seeded draw.
pub const PRNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64)";

/// Floor for the previous fit in the relative-change stopping rule.
const FIT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// `V` drawn uniformly from `[0, 1)` with the configured seed.
    Random,
    /// `V` from the leading eigenvectors of `sum_k X_k^T X_k`, made non-negative.
    Eye,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rank: usize,
    pub max_iters: usize,
    /// Stop once the relative change in fit drops below this.
    pub tol: f64,
    pub nonneg: bool,
    pub init: Init,
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
}

impl SolverConfig {
    pub fn new(rank: usize) -> Self {
        SolverConfig {
            rank,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rank: 1,
            max_iters: 200,
            tol: 1e-8,
            nonneg: true,
            init: Init::Random,
            seed: 0,
            threads: 1,
        }
    }
}

/// The model state: `{Q_k}`, `H`, `{S_k}` and `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parafac2Factors {
    /// Column-orthonormal `I_k x R` matrices; empty until the first update.
    pub q: Vec<DenseMatrix>,
    pub h: DenseMatrix,
    /// `K x R`; row `k` is the diagonal of `S_k`.
    pub s: DenseMatrix,
    pub v: DenseMatrix,
}

impl Parafac2Factors {
    pub fn rank(&self) -> usize {
        self.h.n_rows()
    }

    pub fn n_subjects(&self) -> usize {
        self.s.n_rows()
    }

    /// Diagonal of `S_k`.
    pub fn s_diag(&self, k: usize) -> &[f64] {
        self.s.row(k)
    }

    /// `U_k = Q_k H` for every subject.
    pub fn assemble_u(&self) -> Vec<DenseMatrix> {
        self.q
            .iter()
            .map(|q| q.matmul(&self.h).expect("Q_k has R columns"))
            .collect()
    }

    /// Dense model slice `U_k S_k V^T`.
    pub fn reconstruct(&self, k: usize) -> DenseMatrix {
        let mut us = self.q[k].matmul(&self.h).expect("Q_k has R columns");
        us.scale_columns(self.s.row(k));
        us.matmul(&self.v.transpose()).expect("V has R columns")
    }

    /// `max_k ||Q_k^T Q_k - I||_F`.
    pub fn orthonormality_error(&self) -> f64 {
        let eye = DenseMatrix::identity(self.rank());
        self.q
            .iter()
            .map(|q| gram(q).distance(&eye))
            .fold(0.0, f64::max)
    }

    /// `max_k ||U_k^T U_k - H^T H||_F / ||H^T H||_F`.
    pub fn cross_product_error(&self) -> f64 {
        let phi = gram(&self.h);
        let scale = phi.frobenius_norm();
        self.assemble_u()
            .iter()
            .map(|u| gram(u).distance(&phi) / scale)
            .fold(0.0, f64::max)
    }
}

/// `U_k = Q_k H` for every subject.
pub fn assemble_u(factors: &Parafac2Factors) -> Vec<DenseMatrix> {
    factors.assemble_u()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual_sq: f64,
    pub fit: f64,
    pub procrustes_ms: f64,
    pub project_ms: f64,
    pub cp_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    /// `sum_k ||X_k||^2`.
    pub data_norm_sq: f64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

impl FitTrace {
    pub fn final_fit(&self) -> Option<f64> {
        self.iterations.last().map(|r| r.fit)
    }
}

/// Builds the starting point: `H = I`, every `S_k = 1`, `V` from `config.init`.
/// `Q` is left empty; the first Procrustes pass defines it.
pub fn initialize(x: &IrregularTensor, config: &SolverConfig) -> Result<Parafac2Factors> {
    config.validate()?;
    let r = config.rank;
    if x.n_cols() < r {
        return Err(Error::RankExceedsVariables {
            cols: x.n_cols(),
            rank: r,
        });
    }
    if let Some((k, s)) = x.slices().iter().enumerate().find(|(_, s)| s.n_rows() < r) {
        return Err(Error::RankExceedsObservations {
            subject: k,
            rows: s.n_rows(),
            rank: r,
        });
    }
    let v = match config.init {
        Init::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            DenseMatrix::from_fn(x.n_cols(), r, |_, _| rng.gen::<f64>())
        }
        Init::Eye => leading_eigenvectors(x, r),
    };
    Ok(Parafac2Factors {
        q: Vec::new(),
        h: DenseMatrix::identity(r),
        s: DenseMatrix::from_elem(x.n_slices(), r, 1.0),
        v,
    })
}

/// Absolute values of the `r` leading eigenvectors of `sum_k X_k^T X_k`.
fn leading_eigenvectors(x: &IrregularTensor, r: usize) -> DenseMatrix {
    let n = x.n_cols();
    let mut cross = DenseMatrix::zeros(n, n);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for slice in x.slices() {
        rows.clear();
        rows.resize(slice.n_rows(), Vec::new());
        for (i, j, v) in slice.triplets() {
            rows[i].push((j, v));
        }
        for row in &rows {
            for &(a, va) in row {
                for &(b, vb) in row {
                    cross[(a, b)] += va * vb;
                }
            }
        }
    }
    let (values, vectors) = symmetric_eigen(&cross);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    DenseMatrix::from_fn(n, r, |i, c| vectors[(i, order[c])].abs())
}

/// Solves `min ||X_k - Q H diag(s) V^T||_F` over column-orthonormal `Q`.
///
/// With `M = H diag(s) (X_k V)^T = P Sigma Z^T`, the optimum is `Q = Z P^T`.
pub fn procrustes_update(
    x: &SparseSlice,
    h: &DenseMatrix,
    s: &[f64],
    v: &DenseMatrix,
) -> Result<DenseMatrix> {
    let r = h.n_rows();
    if h.n_cols() != r || s.len() != r || v.shape() != (x.n_cols(), r) {
        return Err(Error::Shape(format!(
            "procrustes with H {:?}, S of length {}, V {:?} and a slice with {} columns",
            h.shape(),
            s.len(),
            v.shape(),
            x.n_cols()
        )));
    }
    if x.n_rows() < r {
        return Err(Error::Shape(format!(
            "slice has {} rows, fewer than rank {r}",
            x.n_rows()
        )));
    }
    let xv = x.times_dense(v)?;
    let mut hs = h.clone();
    hs.scale_columns(s);
    // M = (H S) (X V)^T, R x I_k
    let mut m = DenseMatrix::zeros(r, x.n_rows());
    for a in 0..r {
        let hrow = hs.row(a);
        for i in 0..x.n_rows() {
            m[(a, i)] = hrow.iter().zip(xv.row(i)).map(|(p, q)| p * q).sum();
        }
    }
    let svd = economy_svd(&m)?;
    svd.z.matmul(&svd.p.transpose())
}

/// `Y_k = Q_k^T X_k`, computed over the non-zero columns of each `X_k`.
pub fn project_slices(x: &IrregularTensor, q: &[DenseMatrix]) -> Result<DenseSliceCollection> {
    if q.len() != x.n_slices() {
        return Err(Error::Shape(format!(
            "{} projection matrices for {} slices",
            q.len(),
            x.n_slices()
        )));
    }
    let r = q.first().map_or(0, DenseMatrix::n_cols);
    if let Some((k, _)) = q
        .iter()
        .zip(x.slices())
        .enumerate()
        .find(|(_, (qk, xk))| qk.shape() != (xk.n_rows(), r))
    {
        return Err(Error::Shape(format!(
            "Q_{k} is {:?}, expected {}x{r}",
            q[k].shape(),
            x.slice(k).n_rows()
        )));
    }
    let parts = x
        .slices()
        .par_iter()
        .zip(q.par_iter())
        .with_min_len(64)
        .map(|(xk, qk)| project_one(xk, qk, r))
        .collect();
    DenseSliceCollection::from_packed(r, x.n_cols(), parts)
}

fn project_one(x: &SparseSlice, q: &DenseMatrix, r: usize) -> (Vec<usize>, Vec<f64>) {
    let mut values = vec![0.0; r * x.nnz_cols().len()];
    for ((_, rows, vals), dst) in x.columns().zip(values.chunks_exact_mut(r.max(1))) {
        for (&i, &xv) in rows.iter().zip(vals) {
            for (d, &qv) in dst.iter_mut().zip(q.row(i)) {
                *d += xv * qv;
            }
        }
    }
    (x.nnz_cols().to_vec(), values)
}

/// Direct residual `sum_k ||X_k - U_k S_k V^T||_F^2` over dense slices.
/// Cost is `O(sum_k I_k J R)`; meant for checking small problems.
pub fn direct_residual_sq(x: &IrregularTensor, factors: &Parafac2Factors) -> f64 {
    (0..x.n_slices())
        .map(|k| {
            x.slice(k)
                .to_dense()
                .distance(&factors.reconstruct(k))
                .powi(2)
        })
        .sum()
}

/// Iteration-at-a-time PARAFAC2-ALS driver.
pub struct Parafac2Solver<'a> {
    x: &'a IrregularTensor,
    config: SolverConfig,
    pool: rayon::ThreadPool,
    factors: Parafac2Factors,
    trace: FitTrace,
}

impl<'a> Parafac2Solver<'a> {
    pub fn new(x: &'a IrregularTensor, config: SolverConfig) -> Result<Self> {
        let factors = initialize(x, &config)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let trace = FitTrace {
            data_norm_sq: x.frobenius_sq(),
            ..Default::default()
        };
        Ok(Parafac2Solver {
            x,
            config,
            pool,
            factors,
            trace,
        })
    }

    pub fn factors(&self) -> &Parafac2Factors {
        &self.factors
    }

    pub fn trace(&self) -> &FitTrace {
        &self.trace
    }

    pub fn is_done(&self) -> bool {
        self.trace.converged || self.trace.iterations.len() >= self.config.max_iters
    }

    /// Runs one outer iteration and returns its record.
    pub fn step(&mut self) -> Result<&IterationRecord> {
        let pool = &self.pool;
        let iteration = self.trace.iterations.len() + 1;
        let (record, factors) = pool.install(|| self.iterate(iteration))?;
        self.factors = factors;

        let prev = self
            .trace
            .iterations
            .last()
            .map_or(0.0, |r: &IterationRecord| r.fit);
        let change = (record.fit - prev).abs() / prev.max(FIT_FLOOR);
        self.trace.converged = change < self.config.tol;
        self.trace.iterations.push(record);
        Ok(self.trace.iterations.last().expect("just pushed"))
    }

    fn iterate(&self, iteration: usize) -> Result<(IterationRecord, Parafac2Factors)> {
        let f = &self.factors;
        let start = Instant::now();
        let q: Vec<DenseMatrix> = self
            .x
            .slices()
            .par_iter()
            .enumerate()
            .map(|(k, xk)| procrustes_update(xk, &f.h, f.s.row(k), &f.v))
            .collect::<Result<_>>()?;
        let t_procrustes = start.elapsed();

        let start = Instant::now();
        let y = project_slices(self.x, &q)?;
        let t_project = start.elapsed();

        let start = Instant::now();
        let cp = CpFactors::new(f.h.clone(), f.v.clone(), f.s.clone())?;
        let sweep = cp_als_sweep(&y, &cp, self.config.nonneg).map_err(|e| match e {
            Error::NonFinite(_) => Error::Divergence(iteration),
            other => other,
        })?;
        let t_cp = start.elapsed();

        let CpFactors { h, v, w, .. } = sweep.factors;
        let cross = hadamard(&gram(&h), &gram(&v))?;
        let residual_sq =
            (self.trace.data_norm_sq + model_terms(&w, &sweep.mode3, &cross)).max(0.0);
        let fit = 1.0 - residual_sq / self.trace.data_norm_sq;
        if !fit.is_finite() {
            return Err(Error::Divergence(iteration));
        }
        let record = IterationRecord {
            iteration,
            residual_sq,
            fit,
            procrustes_ms: t_procrustes.as_secs_f64() * 1e3,
            project_ms: t_project.as_secs_f64() * 1e3,
            cp_ms: t_cp.as_secs_f64() * 1e3,
        };
        Ok((record, Parafac2Factors { q, h, s: w, v }))
    }

    pub fn run(mut self) -> Result<(Parafac2Factors, FitTrace)> {
        while !self.is_done() {
            self.step()?;
        }
        Ok((self.factors, self.trace))
    }
}

/// Fits a PARAFAC2 model with the given configuration.
pub fn fit_parafac2(
    x: &IrregularTensor,
    config: &SolverConfig,
) -> Result<(Parafac2Factors, FitTrace)> {
    Parafac2Solver::new(x, config.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::economy_svd;

    fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
        let g = DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
        let svd = economy_svd(&g).unwrap();
        svd.p.matmul(&svd.z.transpose()).unwrap()
    }

    fn sparse_random(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> SparseSlice {
        let mut t = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if rng.gen_bool(density) {
                    t.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        // keep every row non-empty
        for i in 0..rows {
            t.push((i, rng.gen_range(0..cols), 1.0 + rng.gen::<f64>()));
        }
        SparseSlice::from_triplets(rows, cols, t).unwrap()
    }

    fn random_tensor(rng: &mut ChaCha8Rng, k: usize, j: usize, rmin: usize) -> IrregularTensor {
        let slices = (0..k)
            .map(|_| {
                let rows = rng.gen_range(rmin..rmin + 6);
                sparse_random(rng, rows, j, 0.3)
            })
            .collect();
        IrregularTensor::new(j, slices).unwrap()
    }

    #[test]
    fn initialize_defaults() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_tensor(&mut rng, 4, 6, 3);
        let cfg = SolverConfig {
            rank: 2,
            seed: 7,
            ..Default::default()
        };
        let a = initialize(&x, &cfg).unwrap();
        let b = initialize(&x, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.h, DenseMatrix::identity(2));
        assert_eq!(a.s, DenseMatrix::from_elem(4, 2, 1.0));
        assert!(a.v.as_slice().iter().all(|&v| (0.0..1.0).contains(&v)));
        assert!(a.q.is_empty());
        let other = initialize(&x, &SolverConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.v, other.v);
    }

    #[test]
    fn initialize_rejects_large_rank() {
        let x = IrregularTensor::new(
            3,
            vec![SparseSlice::from_triplets(2, 3, [(0, 0, 1.0), (1, 2, 1.0)]).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            initialize(&x, &SolverConfig::new(3)),
            Err(Error::RankExceedsObservations {
                subject: 0,
                rows: 2,
                rank: 3
            })
        ));
        let x = IrregularTensor::new(
            2,
            vec![SparseSlice::from_dense(&DenseMatrix::from_elem(4, 2, 1.0))],
        )
        .unwrap();
        assert!(matches!(
            initialize(&x, &SolverConfig::new(3)),
            Err(Error::RankExceedsVariables { cols: 2, rank: 3 })
        ));
        assert!(matches!(
            initialize(&x, &SolverConfig::new(0)),
            Err(Error::Config(_))
        ));
        let bad_tol = SolverConfig {
            tol: 0.0,
            ..SolverConfig::new(1)
        };
        assert!(matches!(initialize(&x, &bad_tol), Err(Error::Config(_))));
    }

    #[test]
    fn eye_init_on_single_column() {
        // only column 2 is populated, so the Gram matrix is rank one along e_2
        let slices = vec![
            SparseSlice::from_triplets(2, 5, [(0, 2, 1.5), (1, 2, -2.0)]).unwrap(),
            SparseSlice::from_triplets(1, 5, [(0, 2, 3.0)]).unwrap(),
        ];
        let x = IrregularTensor::new(5, slices).unwrap();
        let cfg = SolverConfig {
            rank: 1,
            init: Init::Eye,
            ..Default::default()
        };
        let f = initialize(&x, &cfg).unwrap();
        for i in 0..5 {
            let expected = if i == 2 { 1.0 } else { 0.0 };
            assert!((f.v[(i, 0)] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn procrustes_recovers_orthonormal_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xk = random_orthonormal(&mut rng, 3, 3);
        let eye = DenseMatrix::identity(3);
        let q = procrustes_update(&SparseSlice::from_dense(&xk), &eye, &[1.0; 3], &eye).unwrap();
        assert!(q.distance(&xk) < 1e-12);
    }

    #[test]
    fn procrustes_noiseless_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (i, j, r) = (7, 6, 3);
        let q_true = random_orthonormal(&mut rng, i, r);
        let h = DenseMatrix::from_fn(r, r, |_, _| rng.gen::<f64>());
        let s: Vec<f64> = (0..r).map(|_| 0.5 + rng.gen::<f64>()).collect();
        let v = DenseMatrix::from_fn(j, r, |_, _| rng.gen::<f64>());
        let mut hs = h.clone();
        hs.scale_columns(&s);
        let model = hs.matmul(&v.transpose()).unwrap();
        let xk = q_true.matmul(&model).unwrap();
        let q = procrustes_update(&SparseSlice::from_dense(&xk), &h, &s, &v).unwrap();
        let residual = xk.distance(&q.matmul(&model).unwrap()).powi(2);
        assert!(residual < 1e-18, "{residual}");
        assert!(q.distance(&q_true) < 1e-9);
    }

    #[test]
    fn procrustes_beats_random_competitors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_tensor(&mut rng, 1, 8, 4);
        let xk = x.slice(0);
        let r = 3;
        let h = DenseMatrix::from_fn(r, r, |_, _| rng.gen_range(-1.0..1.0));
        let s: Vec<f64> = (0..r).map(|_| rng.gen::<f64>()).collect();
        let v = DenseMatrix::from_fn(8, r, |_, _| rng.gen::<f64>());
        let mut hs = h.clone();
        hs.scale_columns(&s);
        let model = hs.matmul(&v.transpose()).unwrap();
        let dense = xk.to_dense();
        let q = procrustes_update(xk, &h, &s, &v).unwrap();
        assert!(gram(&q).distance(&DenseMatrix::identity(r)) < 1e-10);
        let best = dense.distance(&q.matmul(&model).unwrap()).powi(2);
        for _ in 0..100 {
            let other = random_orthonormal(&mut rng, xk.n_rows(), r);
            let obj = dense.distance(&other.matmul(&model).unwrap()).powi(2);
            assert!(best <= obj + 1e-12);
        }
    }

    #[test]
    fn projection_examples() {
        let x = IrregularTensor::new(
            3,
            vec![
                SparseSlice::from_triplets(2, 3, [(0, 1, 2.0), (1, 1, 1.0), (1, 2, 3.0)]).unwrap(),
            ],
        )
        .unwrap();
        let y = project_slices(&x, &[DenseMatrix::identity(2)]).unwrap();
        assert_eq!(y.to_dense(0), x.slice(0).to_dense());

        let x = IrregularTensor::new(
            4,
            vec![SparseSlice::from_triplets(3, 4, [(1, 2, 5.0)]).unwrap()],
        )
        .unwrap();
        let q = DenseMatrix::from_rows(&[[1.0, 0.0], [0.6, 0.8], [0.0, 1.0]]);
        let y = project_slices(&x, &[q]).unwrap().to_dense(0);
        assert_eq!(
            y,
            DenseMatrix::from_rows(&[[0.0, 0.0, 3.0, 0.0], [0.0, 0.0, 4.0, 0.0]])
        );
    }

    #[test]
    fn projection_keeps_column_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_tensor(&mut rng, 10, 12, 3);
        let q: Vec<DenseMatrix> = x
            .slices()
            .iter()
            .map(|s| random_orthonormal(&mut rng, s.n_rows(), 3))
            .collect();
        let y = project_slices(&x, &q).unwrap();
        for k in 0..x.n_slices() {
            assert_eq!(y.nonzero_columns(k), x.slice(k).nonzero_columns());
            let dense = q[k].t_matmul(&x.slice(k).to_dense()).unwrap();
            assert!(y.to_dense(k).distance(&dense) < 1e-12);
        }
    }

    #[test]
    fn projection_checks_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_tensor(&mut rng, 2, 5, 3);
        assert!(project_slices(&x, &[DenseMatrix::zeros(3, 2)]).is_err());
        let q = vec![DenseMatrix::zeros(1, 2), DenseMatrix::zeros(1, 2)];
        assert!(project_slices(&x, &q).is_err());
    }

    #[test]
    fn single_iteration_with_infinite_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_tensor(&mut rng, 6, 7, 3);
        let cfg = SolverConfig {
            rank: 2,
            tol: f64::INFINITY,
            ..Default::default()
        };
        let (f, trace) = fit_parafac2(&x, &cfg).unwrap();
        assert_eq!(trace.iterations.len(), 1);
        assert!(trace.converged);
        assert_eq!(f.q.len(), 6);
        assert!(f.orthonormality_error() < 1e-8);
        assert!(f.cross_product_error() < 1e-6);
        assert!(f.s.as_slice().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn efficient_residual_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..8 {
            let x = random_tensor(&mut rng, 5 + trial, 9, 4);
            let cfg = SolverConfig {
                rank: 1 + trial % 3,
                max_iters: 3,
                nonneg: trial % 2 == 0,
                seed: trial as u64,
                ..Default::default()
            };
            let mut solver = Parafac2Solver::new(&x, cfg).unwrap();
            while !solver.is_done() {
                let fast = solver.step().unwrap().residual_sq;
                let direct = direct_residual_sq(&x, solver.factors());
                assert!((fast - direct).abs() <= 1e-9 * direct, "{fast} vs {direct}");
            }
        }
    }

    #[test]
    fn assemble_u_examples() {
        let f = Parafac2Factors {
            q: vec![DenseMatrix::from_rows(&[[1.0], [0.0]])],
            h: DenseMatrix::from_rows(&[[2.0]]),
            s: DenseMatrix::from_rows(&[[1.0]]),
            v: DenseMatrix::from_rows(&[[1.0]]),
        };
        assert_eq!(
            assemble_u(&f),
            vec![DenseMatrix::from_rows(&[[2.0], [0.0]])]
        );

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let q = vec![
            random_orthonormal(&mut rng, 4, 2),
            random_orthonormal(&mut rng, 3, 2),
        ];
        let f = Parafac2Factors {
            q: q.clone(),
            h: DenseMatrix::identity(2),
            s: DenseMatrix::from_elem(2, 2, 1.0),
            v: DenseMatrix::from_elem(3, 2, 1.0),
        };
        assert_eq!(f.assemble_u(), q);

        let h = DenseMatrix::from_rows(&[[1.0, 0.5], [-0.3, 2.0]]);
        let f = Parafac2Factors { h, ..f };
        assert!(f.cross_product_error() < 1e-6);
    }
}
