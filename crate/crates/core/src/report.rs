//! Run reports and subject-level component ranking.

use serde::{Deserialize, Serialize};

use crate::bench::{BenchRow, SpeedupRow};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::parafac2::FitTrace;
use crate::tensor::IrregularTensor;

/// Dataset summary: `K`, `J`, max `I_k` and non-zero count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSummary {
    pub subjects: usize,
    pub variables: usize,
    pub max_rows: usize,
    pub nnz: usize,
}

impl DataSummary {
    pub fn of(x: &IrregularTensor) -> Self {
        DataSummary {
            subjects: x.n_slices(),
            variables: x.n_cols(),
            max_rows: x.max_rows(),
            nnz: x.total_nnz(),
        }
    }
}

/// Machine-readable record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: serde_json::Value,
    pub data: DataSummary,
    pub threads: usize,
    pub wall_ms: f64,
    /// One trace per restart.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<FitTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_restart: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bench: Vec<BenchRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub speedups: Vec<SpeedupRow>,
}

impl RunReport {
    pub fn new(
        command: &str,
        config: serde_json::Value,
        data: DataSummary,
        threads: usize,
    ) -> Self {
        RunReport {
            command: command.to_string(),
            config,
            data,
            threads,
            wall_ms: 0.0,
            traces: Vec::new(),
            best_restart: None,
            bench: Vec::new(),
            speedups: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

/// Components of subject `k` ordered by `S_k` weight, largest first, ties
/// to the lower index. `s` is `K x R` with row `k` holding `diag(S_k)`.
pub fn rank_components(s: &DenseMatrix, k: usize, top_n: usize) -> Result<Vec<(usize, f64)>> {
    if k >= s.n_rows() {
        return Err(Error::SubjectOutOfRange {
            subject: k,
            count: s.n_rows(),
        });
    }
    if top_n > s.n_cols() {
        return Err(Error::Config(format!(
            "top {top_n} exceeds rank {}",
            s.n_cols()
        )));
    }
    let mut ranked: Vec<(usize, f64)> = s.row(k).iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    Ok(ranked)
}
