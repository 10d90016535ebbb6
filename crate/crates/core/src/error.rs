use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty slice")]
    EmptySlice,

    #[error("subject {0} has no non-zero entries")]
    EmptySubject(usize),

    #[error("rank exceeds observations: subject {subject} has {rows} rows, rank is {rank}")]
    RankExceedsObservations {
        subject: usize,
        rows: usize,
        rank: usize,
    },

    #[error("rank exceeds variables: {cols} columns, rank is {rank}")]
    RankExceedsVariables { cols: usize, rank: usize },

    #[error("subject {subject} out of range (K = {count})")]
    SubjectOutOfRange { subject: usize, count: usize },

    #[error("{msg} at line {line}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    Format(String),

    #[error("NNLS did not converge within {0} iterations")]
    NnlsNoConvergence(usize),

    #[error("numerical divergence at iteration {0}")]
    Divergence(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::NnlsNoConvergence(_) | Error::Divergence(_) | Error::NonFinite(_) => 3,
            _ => 2,
        }
    }
}
