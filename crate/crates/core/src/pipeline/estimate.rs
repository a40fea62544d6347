use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hypotheses::{generate_hypotheses, score_hypothesis, Hypothesis};
use super::refine::{refine_step, DenseProblem};
use super::{DenseSampling, FeatureProvider, MarginalMode, PipelineConfig, PipelineError, ProviderContext};
use crate::assignment::{attention_matrix, conditional_marginals, dual_softmax, extract_marginals};
use crate::geometry::{backproject, BinaryMask, CameraIntrinsics, DepthImage, PointCloud, RigidPose};
use crate::sampling::{dynamic_dense_sample, farthest_point_sample, interpolate_probabilities};
use crate::Scalar;

/// Summary statistics of the interpolated per-point probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionSummary {
    pub mean_background: f64,
    pub mean_occlusion: f64,
    /// Fraction of observation points with background probability above 0.5.
    pub background_fraction: f64,
    /// Fraction of model points with occlusion probability above 0.5.
    pub occluded_fraction: f64,
}

impl OcclusionSummary {
    fn from_probs<T: Scalar>(bg: &[T], occ: &[T]) -> Self {
        let mean = |v: &[T]| v.iter().map(|x| x.as_f64()).sum::<f64>() / v.len().max(1) as f64;
        let above = |v: &[T]| v.iter().filter(|x| x.as_f64() > 0.5).count() as f64 / v.len().max(1) as f64;
        Self {
            mean_background: mean(bg),
            mean_occlusion: mean(occ),
            background_fraction: above(bg),
            occluded_fraction: above(occ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct HypothesisTrace<T: Scalar> {
    pub initial: Hypothesis<T>,
    /// Coarse score after each refinement iteration.
    pub iteration_scores: Vec<T>,
    /// Iterations that kept the previous pose.
    pub fallbacks: usize,
    pub refined: Hypothesis<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct PoseEstimate<T: Scalar> {
    pub pose: RigidPose<T>,
    /// Hypothesis score of `pose` on the coarse clouds.
    pub confidence: T,
    /// Index into `hypotheses` of the returned pose.
    pub chosen: usize,
    pub hypotheses: Vec<HypothesisTrace<T>>,
    pub occlusion: OcclusionSummary,
    pub n_coarse: (usize, usize),
    pub n_dense: (usize, usize),
}

impl<T: Scalar> PoseEstimate<T> {
    /// Refinement iterations, over all hypotheses, that kept their input pose.
    pub fn fallbacks(&self) -> usize {
        self.hypotheses.iter().map(|h| h.fallbacks).sum()
    }
}

/// Backprojects the masked depth and runs [`estimate_pose`].
pub fn estimate_pose_from_depth<T: Scalar>(
    depth: &DepthImage,
    mask: &BinaryMask,
    intrinsics: &CameraIntrinsics<T>,
    model: &PointCloud<T>,
    provider: &dyn FeatureProvider<T>,
    config: &PipelineConfig,
) -> Result<PoseEstimate<T>, PipelineError> {
    let obs = backproject(depth, mask, intrinsics)?;
    estimate_pose(&obs, model, provider, config)
}

/// Full coarse-to-fine estimate of the pose mapping `model` into the camera
/// frame of `obs`.
///
/// Stages: farthest-point coarse samples of both clouds; coarse `Ã`;
/// top-K hypotheses; background/occlusion probabilities interpolated to the
/// full clouds; dense samples (probability-guided or uniform); `n_refine`
/// refinement steps per hypothesis; the refined hypothesis with the best
/// coarse score wins (ties to the lower index).
///
/// Random streams derived from `config.seed`: `split(0)` hypotheses,
/// `split(1)`/`split(2)` dense observation/model samples, `split(3)` the
/// provider context. Hypotheses refine in parallel without shared
/// randomness, so results do not depend on the thread count.
pub fn estimate_pose<T: Scalar>(
    obs: &PointCloud<T>,
    model: &PointCloud<T>,
    provider: &dyn FeatureProvider<T>,
    config: &PipelineConfig,
) -> Result<PoseEstimate<T>, PipelineError> {
    config.validate()?;
    if obs.is_empty() {
        return Err(PipelineError::Empty("observation cloud"));
    }
    if model.is_empty() {
        return Err(PipelineError::Empty("model cloud"));
    }
    let ctx = ProviderContext {
        seed: config.seed.split(3),
    };
    let (f_obs, f_model) = provider.features(obs, model, &ctx)?;
    if f_obs.len() != obs.len() || f_model.len() != model.len() {
        return Err(PipelineError::Provider(format!(
            "{} returned {}/{} feature rows for {}/{} points",
            provider.name(),
            f_obs.len(),
            f_model.len(),
            obs.len(),
            model.len()
        )));
    }

    let tau = T::lit(config.tau);
    let io_c = farthest_point_sample(obs, config.n_coarse.min(obs.len()))?;
    let im_c = farthest_point_sample(model, config.n_coarse.min(model.len()))?;
    let obs_c = obs.select(&io_c);
    let model_c = model.select(&im_c);
    let a_c = dual_softmax(&attention_matrix(&f_obs.select(&io_c), &f_model.select(&im_c))?, tau)?;
    let hypotheses = generate_hypotheses(&a_c, &obs_c, &model_c, &PipelineConfig {
        seed: config.seed.split(0),
        ..config.clone()
    })?;

    let (bg_c, occ_c) = match config.marginals {
        MarginalMode::Conditional => conditional_marginals(&a_c)?,
        MarginalMode::TokenEntries => extract_marginals(&a_c)?,
    };
    let bg = interpolate_probabilities(&obs_c.clone().with_probs(bg_c)?, obs)?;
    let occ = interpolate_probabilities(&model_c.clone().with_probs(occ_c)?, model)?;
    let occlusion = OcclusionSummary::from_probs(&bg, &occ);

    let nd_o = config.n_dense.min(obs.len());
    let nd_m = config.n_dense.min(model.len());
    let (io_d, im_d) = match config.dense_sampling {
        DenseSampling::Dynamic => (
            dynamic_dense_sample(obs, &bg, nd_o, config.seed.split(1))?,
            dynamic_dense_sample(model, &occ, nd_m, config.seed.split(2))?,
        ),
        DenseSampling::Uniform => (farthest_point_sample(obs, nd_o)?, farthest_point_sample(model, nd_m)?),
    };
    let obs_d = obs.select(&io_d);
    let model_d = model.select(&im_d);
    let logits = attention_matrix(&f_obs.select(&io_d), &f_model.select(&im_d))?.into_values();
    let problem = DenseProblem::new(
        obs_d.points(),
        model_d.points(),
        &logits,
        tau,
        T::lit(config.pos_weight),
        T::lit(config.pos_sigma) * model.extent().max(T::lit(1e-9)),
    );

    let traces = hypotheses
        .into_par_iter()
        .map(|initial| -> Result<HypothesisTrace<T>, PipelineError> {
            let mut pose = initial.pose.clone();
            let mut iteration_scores = Vec::with_capacity(config.n_refine);
            let mut fallbacks = 0;
            let mut scratch = Vec::new();
            for _ in 0..config.n_refine {
                let step = refine_step(&pose, &problem, &mut scratch);
                fallbacks += step.fallback as usize;
                pose = step.pose;
                iteration_scores.push(score_hypothesis(&pose, &obs_c, &model_c)?);
            }
            let score = iteration_scores.last().copied().unwrap_or(initial.score);
            Ok(HypothesisTrace {
                initial,
                iteration_scores,
                fallbacks,
                refined: Hypothesis { pose, score },
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut chosen = 0;
    for (k, t) in traces.iter().enumerate() {
        if t.refined.score > traces[chosen].refined.score {
            chosen = k;
        }
    }
    Ok(PoseEstimate {
        pose: traces[chosen].refined.pose.clone(),
        confidence: traces[chosen].refined.score,
        chosen,
        hypotheses: traces,
        occlusion,
        n_coarse: (io_c.len(), im_c.len()),
        n_dense: (io_d.len(), im_d.len()),
    })
}
