//! Timing harness comparing the slice-wise MTTKRP kernels with the naive
//! materialized Khatri-Rao path.
//!
//! Naive cells whose precomputed footprint exceeds the memory budget are
//! recorded as out-of-memory and never run.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::mttkrp::{mttkrp, naive_footprint_bytes, naive_mttkrp, Mode, MttkrpInput};
use crate::parafac2::{initialize, procrustes_update, project_slices, SolverConfig};
use crate::tensor::{DenseSliceCollection, IrregularTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Specialized,
    Naive,
}

/// One timed cell. `mode == None` is the full three-mode sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub kernel: Kernel,
    pub mode: Option<Mode>,
    pub reps: usize,
    pub times_ms: Vec<f64>,
    pub median_ms: Option<f64>,
    pub oom: bool,
    /// Only set for naive cells.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub footprint_bytes: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub mode: Option<Mode>,
    /// `naive median / specialized median`; `None` if either side is missing.
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub rank: usize,
    pub modes: Vec<Mode>,
    pub reps: usize,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    pub budget_bytes: u128,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(rank: usize) -> Self {
        BenchConfig {
            rank,
            modes: Mode::ALL.to_vec(),
            reps: 3,
            threads: 1,
            budget_bytes: 4 << 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub speedups: Vec<SpeedupRow>,
}

/// Median of a non-empty sample.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Kernel operands as the solver would see them: one Procrustes pass and
/// projection from a seeded start, plus random `H`, `V`, `W`.
pub struct BenchOperands {
    pub y: DenseSliceCollection,
    pub h: DenseMatrix,
    pub v: DenseMatrix,
    pub w: DenseMatrix,
}

impl BenchOperands {
    pub fn prepare(x: &IrregularTensor, rank: usize, seed: u64) -> Result<Self> {
        let config = SolverConfig {
            rank,
            seed,
            ..SolverConfig::default()
        };
        let f = initialize(x, &config)?;
        let q = x
            .slices()
            .iter()
            .enumerate()
            .map(|(k, xk)| procrustes_update(xk, &f.h, f.s.row(k), &f.v))
            .collect::<Result<Vec<_>>>()?;
        let y = project_slices(x, &q)?;
        drop(q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut random = |rows| DenseMatrix::from_fn(rows, rank, |_, _| rng.gen::<f64>());
        Ok(BenchOperands {
            h: random(rank),
            v: random(x.n_cols()),
            w: random(x.n_slices()),
            y,
        })
    }

    pub fn input(&self) -> MttkrpInput<'_> {
        MttkrpInput::new(&self.y, &self.h, &self.v, &self.w)
    }
}

/// Times both kernels for every requested mode over `reps` repetitions.
pub fn bench_mttkrp(x: &IrregularTensor, config: &BenchConfig) -> Result<BenchResult> {
    if config.reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let ops = pool.install(|| BenchOperands::prepare(x, config.rank, config.seed))?;
    let input = ops.input();
    let (k, j, r) = (x.n_slices(), x.n_cols(), config.rank);

    let mut rows = Vec::new();
    let mut speedups = Vec::new();
    for kernel in [Kernel::Specialized, Kernel::Naive] {
        let mut sweep: Option<Vec<f64>> = Some(vec![0.0; config.reps]);
        for &mode in &config.modes {
            let footprint = naive_footprint_bytes(k, j, r, mode);
            let mut row = BenchRow {
                kernel,
                mode: Some(mode),
                reps: config.reps,
                times_ms: Vec::new(),
                median_ms: None,
                oom: false,
                footprint_bytes: (kernel == Kernel::Naive).then_some(footprint),
                error: None,
            };
            if kernel == Kernel::Naive && footprint > config.budget_bytes {
                row.oom = true;
            } else {
                for _ in 0..config.reps {
                    let start = Instant::now();
                    let out = pool.install(|| match kernel {
                        Kernel::Specialized => mttkrp(&input, mode),
                        Kernel::Naive => naive_mttkrp(&input, mode),
                    });
                    let ms = start.elapsed().as_secs_f64() * 1e3;
                    match out {
                        Ok(m) => {
                            std::hint::black_box(m);
                            row.times_ms.push(ms);
                        }
                        Err(e) => {
                            row.error = Some(e.to_string());
                            break;
                        }
                    }
                }
            }
            if row.error.is_some() || row.oom {
                row.times_ms.clear();
            }
            row.median_ms = median(&row.times_ms);
            sweep = match sweep {
                Some(mut acc) if row.times_ms.len() == config.reps => {
                    acc.iter_mut().zip(&row.times_ms).for_each(|(a, t)| *a += t);
                    Some(acc)
                }
                _ => None,
            };
            rows.push(row);
        }
        let times = sweep.unwrap_or_default();
        rows.push(BenchRow {
            kernel,
            mode: None,
            reps: config.reps,
            median_ms: median(&times),
            oom: rows.iter().any(|row| row.kernel == kernel && row.oom),
            times_ms: times,
            footprint_bytes: None,
            error: None,
        });
    }

    let modes = config.modes.iter().map(|&m| Some(m)).chain([None]);
    for mode in modes {
        let med = |kernel| {
            rows.iter()
                .find(|row| row.kernel == kernel && row.mode == mode)
                .and_then(|row| row.median_ms)
        };
        let speedup = match (med(Kernel::Naive), med(Kernel::Specialized)) {
            (Some(n), Some(s)) if s > 0.0 => Some(n / s),
            _ => None,
        };
        speedups.push(SpeedupRow { mode, speedup });
    }
    Ok(BenchResult { rows, speedups })
}
