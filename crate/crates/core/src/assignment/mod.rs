//! Feature-space correspondence machinery: attention matrices with a
//! background row and an occlusion column, dual softmax, probability
//! extraction, correspondence sampling, ground-truth labels and the
//! cross-entropy training losses.
//!
//! Matrix layout: row 0 belongs to the observation-side background token,
//! column 0 to the model-side occlusion token, and entry `(i, j)` with
//! `i, j >= 1` pairs observation point `i - 1` with model point `j - 1`.

mod labels;
mod loss;
mod matrix;
mod sample;

pub use labels::{ground_truth_labels, LabelVector, DEFAULT_DELTA_DIS};
pub use loss::{infonce_loss, multi_block_loss};
pub use matrix::{
    attention_matrix, col_softmax, conditional_marginals, dual_softmax, extract_marginals, row_softmax,
    AssignmentMatrix, FeatureSet, MatrixKind, DEFAULT_TAU,
};
pub use sample::{sample_correspondences, CorrespondenceSampler};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::sampling::SamplingError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignmentError {
    #[error("feature dimension mismatch: observation {obs}, model {model}")]
    DimensionMismatch { obs: usize, model: usize },
    #[error("invalid features: {0}")]
    InvalidFeatures(String),
    #[error("expected a {expected:?} assignment matrix, got {found:?}")]
    WrongKind { expected: MatrixKind, found: MatrixKind },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("assignment matrix interior has no positive mass")]
    ZeroInteriorMass,
    #[error("label {label} at position {index} exceeds the maximum {max}")]
    LabelOutOfRange { index: usize, label: usize, max: usize },
    #[error("label vector has length {found}, matrix expects {expected}")]
    LabelLengthMismatch { expected: usize, found: usize },
    #[error("distance threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}
