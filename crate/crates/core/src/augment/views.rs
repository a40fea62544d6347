use nalgebra::Vector3;
use rand::Rng;

use super::AugmentError;
use crate::sampling::SamplerSeed;

/// Number of opposing template-view pairs (42 views).
pub const DEFAULT_VIEW_PAIRS: usize = 21;

/// View directions where views `2i` and `2i+1` are opposite each other.
/// Even views spiral over the upper hemisphere (`z > 0`).
pub fn canonical_view_directions(n_pairs: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n_pairs)
        .flat_map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / n_pairs as f64;
            let r = (1.0 - z * z).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            let d = Vector3::new(r * c, r * s, z);
            [d, -d]
        })
        .collect()
}

/// Picks one view (probability 0.5, either side equally likely) or both
/// views of each opposing pair. Returns ascending view indices.
pub fn sample_view_subset(n_pairs: usize, seed: SamplerSeed) -> Result<Vec<usize>, AugmentError> {
    if n_pairs == 0 {
        return Err(AugmentError::NoViewPairs);
    }
    let mut rng = seed.rng();
    let mut out = Vec::with_capacity(2 * n_pairs);
    for i in 0..n_pairs {
        let both: bool = rng.random();
        let first: bool = rng.random();
        if both || first {
            out.push(2 * i);
        }
        if both || !first {
            out.push(2 * i + 1);
        }
    }
    Ok(out)
}
