//! Rigid-body math, camera model, images, point clouds, nearest-neighbour
//! queries and the weighted rigid-transform solver.
//!
//! Pose convention used throughout the crate: a pose maps model-frame points
//! into the camera frame, `p_cam = R * p_model + t`. Expressions of the form
//! `R (p - t)` that take camera points back to the model frame are realised
//! with [`RigidPose::inverse`].

mod camera;
mod cloud;
mod image;
mod knn;
mod pose;
mod solver;

pub use camera::{backproject, project, CameraIntrinsics};
pub use cloud::{transform, PointCloud};
pub use image::{BinaryMask, DepthImage};
pub use knn::{nearest_neighbors, nearest_neighbors_points, GRID_THRESHOLD};
pub use pose::RigidPose;
pub use solver::{solve_pose_pairs, solve_pose_weighted_svd};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid rigid pose: {0}")]
    InvalidPose(String),
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error("invalid depth image: {0}")]
    InvalidDepth(String),
    #[error("need at least {needed} point pairs, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("length mismatch: src {src}, dst {dst}, weights {weights}")]
    LengthMismatch {
        src: usize,
        dst: usize,
        weights: usize,
    },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("degenerate correspondence set (cross-covariance singular values {singular_values:?})")]
    Degenerate { singular_values: [f64; 3] },
    #[error("nearest-neighbour reference set is empty")]
    EmptyReference,
    #[error("points at or behind the camera plane (z <= 0) at indices {indices:?}")]
    BehindCamera { indices: Vec<usize> },
}
