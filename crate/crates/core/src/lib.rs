//! Compressed-sensing reduction for sparse multi-label prediction.
//!
//! Label vectors `y ∈ R^d` are compressed to `Ay ∈ R^m` with a random
//! sensing matrix, `m` regressors are trained on the compressed targets, and
//! sparse label predictions are recovered from the regressors' outputs with
//! a greedy pursuit (OMP, CoSaMP) or correlation decoding.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the common `f64` instantiation. The experiment harness
//! works in `f64`.

// `!(x >= 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod learner;
pub mod linalg;
pub mod oracles;
pub mod recovery;
pub mod rng;
pub mod scalar;
pub mod sensing;
pub mod sparse;

pub use error::{Error, ErrorKind, Result};
pub use recovery::Algorithm;
pub use scalar::Real;
pub use sensing::MatrixKind;

pub type CompressionMatrixF64 = sensing::CompressionMatrix<f64>;
pub type CompressionMatrixF32 = sensing::CompressionMatrix<f32>;
pub type RegressorBankF64 = learner::RegressorBank<f64>;
pub type RegressorBankF32 = learner::RegressorBank<f32>;
pub type SparseLabelVectorF64 = sparse::SparseLabelVector<f64>;
pub type SparseLabelVectorF32 = sparse::SparseLabelVector<f32>;
pub type FeatureVectorF64 = sparse::FeatureVector<f64>;
pub type FeatureVectorF32 = sparse::FeatureVector<f32>;
pub type ReconstructionConfigF64 = recovery::ReconstructionConfig<f64>;
pub type ReconstructionResultF64 = recovery::ReconstructionResult<f64>;
pub type MultiLabelDatasetF64 = dataset::MultiLabelDataset<f64>;
pub type DenseMatrixF64 = linalg::DenseMatrix<f64>;
