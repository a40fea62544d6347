//! Pose errors (VSD, MSSD, MSPD), BOP average recall, the visibility-decile
//! balanced recall and detection metrics, and BOP result files.

mod decile;
mod detection;
mod pose_error;
mod recall;
mod results;

pub use decile::{aggregate_datasets, visibility_decile, DecileReport, N_DECILES};
pub use detection::{decile_detection_metrics, Detection, DetectionGt, DetectionParams, DetectionReport, Region};
pub use pose_error::{mspd_error, mssd_error, vsd_error, MetricThresholds};
pub use recall::{evaluate_instances, recall_report, uar, InstanceOutcome, MetricKind, UarReport};
pub use results::{format_g, parse_results, parse_results_str, write_results, write_results_string, PoseResultRow, RESULTS_HEADER};

use std::path::PathBuf;

use thiserror::Error;

use crate::bop::BopError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("result rows reference unknown ground truth (scene_id, im_id, obj_id): {0:?}")]
    UnknownGt(Vec<(usize, usize, usize)>),
    #[error("the model renders to no pixels under the {0} pose")]
    EmptyRender(&'static str),
    #[error("a model point projects from behind the camera under the {0} pose")]
    BehindCamera(&'static str),
    #[error("detections and ground truth mix boxes and masks")]
    MixedRegions,
    #[error(transparent)]
    Bop(#[from] BopError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}
