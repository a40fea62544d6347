use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError};
use crate::assignment::{AssignmentMatrix, CorrespondenceSampler};
use crate::geometry::{nearest_neighbors_points, solve_pose_pairs, GeometryError, PointCloud, RigidPose};
use crate::Scalar;

/// Floor (meters per point) on the mean residual in the hypothesis score.
pub const SCORE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Hypothesis<T: Scalar> {
    pub pose: RigidPose<T>,
    pub score: T,
}

/// Inverse mean observation-to-model distance: the model is mapped into the
/// camera frame by `pose`, each coarse observation takes its nearest mapped
/// model point, and `s = N / max(Σ d_i, ε·N)`.
pub fn score_hypothesis<T: Scalar>(
    pose: &RigidPose<T>,
    obs_coarse: &PointCloud<T>,
    model_coarse: &PointCloud<T>,
) -> Result<T, PipelineError> {
    if obs_coarse.is_empty() {
        return Err(PipelineError::Empty("coarse observation cloud"));
    }
    if model_coarse.is_empty() {
        return Err(PipelineError::Empty("coarse model cloud"));
    }
    let mapped: Vec<_> = model_coarse.points().iter().map(|p| pose.apply(p)).collect();
    let (_, dist) = nearest_neighbors_points(obs_coarse.points(), &mapped)?;
    let n = T::lit(obs_coarse.len() as f64);
    let total = dist.iter().fold(T::zero(), |a, d| a + *d);
    Ok(n / total.max(T::lit(SCORE_EPS) * n))
}

/// Draws `4·K` candidate poses, each solved by unweighted SVD from
/// `corr_per_hyp` correspondences sampled from the interior of `ã_c`, and
/// returns the `K` best by [`score_hypothesis`] (ties keep draw order).
///
/// Candidate `c` uses the stream `seed.split(c)`, so the candidates of a
/// smaller `K` are a prefix of those of a larger one. Degenerate draws are
/// skipped; after `10·pool` attempts without filling the pool the call fails.
pub fn generate_hypotheses<T: Scalar>(
    a_coarse: &AssignmentMatrix<T>,
    obs_coarse: &PointCloud<T>,
    model_coarse: &PointCloud<T>,
    config: &PipelineConfig,
) -> Result<Vec<Hypothesis<T>>, PipelineError> {
    config.validate()?;
    if a_coarse.n_obs() != obs_coarse.len() || a_coarse.n_model() != model_coarse.len() {
        return Err(PipelineError::InvalidConfig(format!(
            "assignment matrix is for {}x{} points, clouds have {} and {}",
            a_coarse.n_obs(),
            a_coarse.n_model(),
            obs_coarse.len(),
            model_coarse.len()
        )));
    }
    let sampler = CorrespondenceSampler::new(a_coarse)?;
    let pool = config.pool_size();
    let max_attempts = 10 * pool;
    let ones = vec![T::one(); config.corr_per_hyp];
    let mut candidates = Vec::with_capacity(pool);
    let mut attempt = 0;
    while candidates.len() < pool {
        if attempt == max_attempts {
            return Err(PipelineError::HypothesesExhausted { attempts: attempt });
        }
        let pairs = sampler.draw(config.corr_per_hyp, config.seed.split(attempt as u64));
        attempt += 1;
        let src: Vec<_> = pairs.iter().map(|&(_, j)| model_coarse.points()[j - 1]).collect();
        let dst: Vec<_> = pairs.iter().map(|&(i, _)| obs_coarse.points()[i - 1]).collect();
        match solve_pose_pairs(&src, &dst, &ones) {
            Ok(pose) => {
                let score = score_hypothesis(&pose, obs_coarse, model_coarse)?;
                candidates.push(Hypothesis { pose, score });
            }
            Err(GeometryError::Degenerate { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    candidates.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
    candidates.truncate(config.k);
    Ok(candidates)
}
