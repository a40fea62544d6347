use rand::distr::Open01;
use rand::Rng;

use super::{farthest_point_sample, SamplerSeed, SamplingError};
use crate::geometry::PointCloud;
use crate::Scalar;

/// Lower bound on the sampling weight of any point, so that points deemed
/// occluded or background remain selectable.
pub const VISIBILITY_WEIGHT_FLOOR: f64 = 1e-4;

/// Samples `k` distinct indices without replacement with probabilities
/// proportional to `weights` (Gumbel-Top-k).
///
/// Each positive weight gets the key `ln w_i + G_i`, `G_i ~ Gumbel(0, 1)`; the
/// `k` largest keys are returned in descending key order. Zero weights are
/// never selected.
pub fn gumbel_top_k<T: Scalar>(
    weights: &[T],
    k: usize,
    seed: SamplerSeed,
) -> Result<Vec<usize>, SamplingError> {
    if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < T::zero()) {
        return Err(SamplingError::InvalidWeights(format!(
            "weight {} at index {i} is negative or not finite",
            weights[i].as_f64()
        )));
    }
    let positive = weights.iter().filter(|w| **w > T::zero()).count();
    if k > positive {
        return Err(SamplingError::TooManySamples {
            k,
            available: positive,
        });
    }
    let mut rng = seed.rng();
    let mut keys: Vec<(f64, usize)> = Vec::with_capacity(positive);
    for (i, w) in weights.iter().enumerate() {
        // One uniform per index keeps the stream aligned with the input layout.
        let u: f64 = rng.sample(Open01);
        if *w > T::zero() {
            keys.push((w.as_f64().ln() - (-u.ln()).ln(), i));
        }
    }
    let desc = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if k < keys.len() && k > 0 {
        keys.select_nth_unstable_by(k - 1, desc);
        keys.truncate(k);
    }
    keys.sort_by(desc);
    keys.truncate(k);
    Ok(keys.into_iter().map(|(_, i)| i).collect())
}

/// `max(1 - p, floor)` per point.
pub fn visibility_weights<T: Scalar>(probs: &[T]) -> Vec<T> {
    let floor = T::lit(VISIBILITY_WEIGHT_FLOOR);
    probs.iter().map(|p| (T::one() - *p).max(floor)).collect()
}

/// Dense subsample that favours points with a low occlusion/background
/// probability: Gumbel-Top-k over [`visibility_weights`].
pub fn dynamic_dense_sample<T: Scalar>(
    cloud: &PointCloud<T>,
    probs: &[T],
    k: usize,
    seed: SamplerSeed,
) -> Result<Vec<usize>, SamplingError> {
    if probs.len() != cloud.len() {
        return Err(SamplingError::LengthMismatch {
            expected: cloud.len(),
            found: probs.len(),
        });
    }
    if k > cloud.len() {
        return Err(SamplingError::TooManySamples {
            k,
            available: cloud.len(),
        });
    }
    if let Some(i) = probs
        .iter()
        .position(|p| !(p.is_finite() && *p >= T::zero() && *p <= T::one()))
    {
        return Err(SamplingError::InvalidWeights(format!(
            "probability {} at index {i} outside [0, 1]",
            probs[i].as_f64()
        )));
    }
    let weights = visibility_weights(probs);
    // Unreachable with a positive floor; kept so a zero floor degrades gracefully.
    if weights.iter().filter(|w| **w > T::zero()).count() < k {
        return farthest_point_sample(cloud, k);
    }
    gumbel_top_k(&weights, k, seed)
}
