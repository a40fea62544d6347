use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::DepthImage;
use crate::synth::{render_depth, ObjectModel, SynthError};
use crate::{Intrinsics, Pose};

fn grid(step: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| step * i as f64).collect()
}

/// Error functions' tolerances and the correctness grids of the recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricThresholds {
    /// VSD misalignment tolerances τ, as fractions of the object diameter.
    pub vsd_taus: Vec<f64>,
    /// VSD correctness thresholds θ on the error value.
    pub vsd_thetas: Vec<f64>,
    /// Occlusion tolerance (meters) of the VSD visibility masks.
    pub vsd_delta: f64,
    /// MSSD thresholds as fractions of the object diameter.
    pub mssd: Vec<f64>,
    /// MSPD thresholds in pixels at a 640-pixel-wide image; scaled by
    /// `width / 640`.
    pub mspd: Vec<f64>,
    /// Ground-truth instances less visible than this are not evaluated.
    pub visib_gt_min: f64,
}

impl Default for MetricThresholds {
    fn default() -> Self {
        Self {
            vsd_taus: grid(0.05, 10),
            vsd_thetas: grid(0.05, 10),
            vsd_delta: 0.015,
            mssd: grid(0.05, 10),
            mspd: grid(5.0, 10),
            visib_gt_min: 0.1,
        }
    }
}

impl MetricThresholds {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let check = |name: &str, g: &[f64]| {
            if g.is_empty() || g.iter().any(|v| !v.is_finite() || *v < 0.0) || g.windows(2).any(|w| w[0] >= w[1]) {
                Err(MetricsError::InvalidInput(format!("{name}: need a non-empty ascending grid of non-negative values")))
            } else {
                Ok(())
            }
        };
        check("vsd_taus", &self.vsd_taus)?;
        check("vsd_thetas", &self.vsd_thetas)?;
        check("mssd", &self.mssd)?;
        check("mspd", &self.mspd)?;
        if !(self.vsd_delta.is_finite() && self.vsd_delta >= 0.0) {
            return Err(MetricsError::InvalidInput("vsd_delta: must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.visib_gt_min) {
            return Err(MetricsError::InvalidInput("visib_gt_min: must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// MSPD thresholds in pixels for an image of the given width.
    pub fn mspd_pixels(&self, width: usize) -> Vec<f64> {
        self.mspd.iter().map(|t| t * width as f64 / 640.0).collect()
    }
}

fn render(model: &ObjectModel, pose: &Pose, k: &Intrinsics, which: &'static str) -> Result<DepthImage, MetricsError> {
    let d = render_depth(model, pose, k).map_err(|e| match e {
        SynthError::BehindCamera(_) => MetricsError::BehindCamera(which),
        other => MetricsError::Synth(other),
    })?;
    if d.valid_count() == 0 {
        return Err(MetricsError::EmptyRender(which));
    }
    Ok(d)
}

/// Visibility of a rendered depth against the scene: rendered pixels that
/// are not behind the scene surface by more than `delta`, or where the
/// scene has no measurement.
fn visibility(scene: &[f64], rendered: &[f64], delta: f64) -> Vec<bool> {
    scene
        .iter()
        .zip(rendered)
        .map(|(s, r)| *r > 0.0 && (*s == 0.0 || r - s <= delta))
        .collect()
}

/// Visible Surface Discrepancy for each `τ` in `taus` (fractions of the
/// diameter).
///
/// Both poses are rendered alone. The ground-truth visibility mask marks
/// rendered pixels consistent with `scene_depth` within `delta`; the
/// estimate's mask does the same and also keeps its rendered pixels inside
/// the ground-truth mask. The error is the fraction of the union of the two
/// masks where only one is set or the rendered depths differ by more than
/// `τ · diameter`.
pub fn vsd_error(
    est: &Pose,
    gt: &Pose,
    model: &ObjectModel,
    scene_depth: &DepthImage,
    intrinsics: &Intrinsics,
    delta: f64,
    taus: &[f64],
) -> Result<Vec<f64>, MetricsError> {
    if scene_depth.width() != intrinsics.width || scene_depth.height() != intrinsics.height {
        return Err(MetricsError::InvalidInput("scene depth size differs from the intrinsics".into()));
    }
    let d_gt = render(model, gt, intrinsics, "ground-truth")?;
    let d_est = render(model, est, intrinsics, "estimated")?;
    let scene = scene_depth.values();
    let v_gt = visibility(scene, d_gt.values(), delta);
    let v_est: Vec<bool> = visibility(scene, d_est.values(), delta)
        .into_iter()
        .zip(&v_gt)
        .zip(d_est.values())
        .map(|((v, g), d)| v || (*g && *d > 0.0))
        .collect();
    let mut union = 0usize;
    let mut diffs = Vec::new();
    for (i, (g, e)) in v_gt.iter().zip(&v_est).enumerate() {
        if *g || *e {
            union += 1;
        }
        if *g && *e {
            diffs.push((d_gt.values()[i] - d_est.values()[i]).abs());
        }
    }
    if union == 0 {
        return Ok(vec![1.0; taus.len()]);
    }
    let exclusive = union - diffs.len();
    Ok(taus
        .iter()
        .map(|tau| {
            // A picometer of slack keeps depth differences that equal the
            // tolerance up to rounding on the accepted side.
            let limit = tau * model.diameter + 1e-12;
            let bad = diffs.iter().filter(|d| **d > limit).count();
            (bad + exclusive) as f64 / union as f64
        })
        .collect())
}

/// Symmetry transforms to minimise over. Shapes with a continuous symmetry
/// also get the rotation aligning `gt` with `est`, which is the exact
/// minimiser for MSSD on a centred sphere.
fn candidate_symmetries(est: &Pose, gt: &Pose, model: &ObjectModel) -> Vec<Pose> {
    let mut out = model.symmetries.clone();
    if model.continuous {
        out.push(Pose::from_parts_unchecked(gt.rotation.transpose() * est.rotation, nalgebra::Vector3::zeros()));
    }
    out
}

/// Maximum Symmetry-aware Surface Distance (meters) over the model cloud.
pub fn mssd_error(est: &Pose, gt: &Pose, model: &ObjectModel) -> f64 {
    let pts = model.cloud.points();
    candidate_symmetries(est, gt, model)
        .iter()
        .map(|s| {
            let g = gt.compose(s);
            pts.iter().map(|p| (est.apply(p) - g.apply(p)).norm()).fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Maximum Symmetry-aware Projection Distance (pixels) over the model cloud.
pub fn mspd_error(est: &Pose, gt: &Pose, model: &ObjectModel, intrinsics: &Intrinsics) -> Result<f64, MetricsError> {
    let pts = model.cloud.points();
    let est_px = pts
        .iter()
        .map(|p| {
            let q = est.apply(p);
            if q.z <= 0.0 {
                return Err(MetricsError::BehindCamera("estimated"));
            }
            Ok(intrinsics.project_point(&q))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = f64::INFINITY;
    for s in candidate_symmetries(est, gt, model) {
        let g = gt.compose(&s);
        let mut worst = 0.0f64;
        for (p, e) in pts.iter().zip(&est_px) {
            let q = g.apply(p);
            if q.z <= 0.0 {
                return Err(MetricsError::BehindCamera("ground-truth"));
            }
            let [u, v] = intrinsics.project_point(&q);
            worst = worst.max(((u - e[0]).powi(2) + (v - e[1]).powi(2)).sqrt());
        }
        best = best.min(worst);
    }
    Ok(best)
}
