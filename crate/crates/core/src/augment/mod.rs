//! Occlusion-style training augmentations on depth images, instance masks
//! and template view sets. Every function is a pure function of its inputs
//! and a [`SamplerSeed`].

mod depth;
mod mask;
mod views;

pub use depth::{augment_depth, DepthAugParams};
pub use mask::{augment_mask, MaskAugOutput, MaskAugParams};
pub use views::{canonical_view_directions, sample_view_subset, DEFAULT_VIEW_PAIRS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugmentError {
    #[error("invalid parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("mask is empty")]
    EmptyMask,
    #[error("need at least one view pair")]
    NoViewPairs,
}

pub(crate) fn check_prob(field: &'static str, p: f64) -> Result<(), AugmentError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(AugmentError::InvalidParams {
            field,
            reason: format!("{p} is not a probability"),
        })
    }
}
