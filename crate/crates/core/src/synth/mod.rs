//! Synthetic occluded scenes with exact ground truth: primitive object
//! models, a point-splat z-buffer renderer and seeded scene layouts.

mod primitives;
mod render;
mod scene;

pub use primitives::{make_primitive_model, ObjectModel, Primitive, CYLINDER_SYMMETRY_STEPS, RENDER_SPACING};
pub use render::{render_depth, render_scene, RenderOutput, RenderedInstance, SPLAT_RADIUS};
pub use scene::{generate_scene, OccluderSpec, SceneConfig, SceneImage, SceneInstance, TargetSpec};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid primitive: {0}")]
    InvalidPrimitive(String),
    #[error("invalid scene configuration: {0}")]
    InvalidConfig(String),
    #[error("instance {0} lies entirely at or behind the camera plane")]
    BehindCamera(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
