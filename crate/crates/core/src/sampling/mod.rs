//! Point-cloud subsampling: farthest-point (static uniform) and
//! probability-guided Gumbel-Top-k (dynamic non-uniform) selection, plus the
//! Walker–Vose alias table and coarse-to-full probability interpolation.

mod alias;
mod fps;
mod gumbel;
mod interp;
mod seed;

pub use alias::AliasTable;
pub use fps::farthest_point_sample;
pub use gumbel::{dynamic_dense_sample, gumbel_top_k, visibility_weights, VISIBILITY_WEIGHT_FLOOR};
pub use interp::{interpolate_probabilities, INTERPOLATION_EPS};
pub use seed::SamplerSeed;

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("requested {k} samples from {available} candidates")]
    TooManySamples { k: usize, available: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("coarse cloud carries no probabilities")]
    MissingProbabilities,
    #[error("coarse cloud is empty")]
    EmptyCoarse,
    #[error("probability vector has length {found}, cloud has {expected} points")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
