//! BOP-style dataset files: 16-bit depth and 8-bit mask PNGs, binary PLY
//! models and the JSON ground-truth tables, plus a benchmark generator and
//! a reader for the resulting layout.

mod dataset;
mod images;
mod ply;
mod writer;

pub use dataset::{CameraInfo, Dataset, GtEntry, GtInfo, ModelInfo, SceneData};
pub use images::{read_depth_png, read_mask_png, write_depth_png, write_mask_png, DEPTH_SCALE_MM};
pub use ply::{read_ply, write_ply};
pub use writer::{generate_benchmark, scene_dir_name, write_atomic, BenchmarkSummary};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum BopError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("depth {value} m at pixel ({u}, {v}) does not fit a 16-bit PNG in 0.1 mm units")]
    DepthOutOfRange { value: f64, u: usize, v: usize },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl BopError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        BopError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, message: impl Into<String>) -> Self {
        BopError::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}
