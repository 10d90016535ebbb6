//! Sparse PARAFAC2 fitting for irregular tensors.
//!
//! The solver alternates a per-subject Procrustes step, a projection of each
//! sparse slice onto its orthonormal factor, and one CP-ALS sweep over the
//! projected `R x J x K` tensor. The sweep is built on slice-wise MTTKRP
//! kernels that only touch the non-zero columns of each projected slice.

pub mod bench;
pub mod cli;
pub mod cp;
pub mod dense;
pub mod error;
pub mod io;
pub mod mttkrp;
pub mod nnls;
pub mod parafac2;
pub mod report;
pub mod synth;
pub mod tensor;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use parafac2::{fit_parafac2, Parafac2Factors, SolverConfig};
pub use tensor::{IrregularTensor, SparseSlice};
