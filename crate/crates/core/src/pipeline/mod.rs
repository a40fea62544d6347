//! End-to-end pose estimation: coarse uniform sampling, coarse matching,
//! multi-hypothesis generation, probability-guided dense sampling and
//! iterative weighted-SVD refinement.

mod config;
mod estimate;
mod hypotheses;
mod provider;
mod refine;

pub use config::{DenseSampling, MarginalMode, PipelineConfig};
pub use estimate::{estimate_pose, estimate_pose_from_depth, HypothesisTrace, OcclusionSummary, PoseEstimate};
pub use hypotheses::{generate_hypotheses, score_hypothesis, Hypothesis, SCORE_EPS};
pub use provider::{CloudFeatureProvider, FeatureProvider, OracleProvider, ProviderContext, RandomProvider};
pub use refine::{refine_once, RefineOutcome, MIN_REFINE_MATCHES};

use thiserror::Error;

use crate::assignment::AssignmentError;
use crate::geometry::GeometryError;
use crate::sampling::SamplingError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),
    #[error("feature provider failed: {0}")]
    Provider(String),
    #[error("no non-degenerate hypothesis after {attempts} correspondence draws")]
    HypothesesExhausted { attempts: usize },
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
