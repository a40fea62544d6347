use rayon::prelude::*;

use super::SamplingError;
use crate::geometry::PointCloud;
use crate::Scalar;

/// Distance regulariser (meters) of the inverse-distance weights; queries
/// closer than this to a coarse point take its probability verbatim.
pub const INTERPOLATION_EPS: f64 = 1e-9;

/// Spreads per-point probabilities of a coarse subsample onto a full cloud by
/// inverse-distance weighting over all coarse points.
///
/// `Pr(q) = Σ_j w_j Pr(c_j)` with `w_j ∝ 1 / (|q - c_j| + ε)` normalised to
/// sum to one. Results are clamped to `[0, 1]`.
pub fn interpolate_probabilities<T: Scalar>(
    coarse: &PointCloud<T>,
    full: &PointCloud<T>,
) -> Result<Vec<T>, SamplingError> {
    if coarse.is_empty() {
        return Err(SamplingError::EmptyCoarse);
    }
    let probs = coarse.probs().ok_or(SamplingError::MissingProbabilities)?;
    let eps = T::lit(INTERPOLATION_EPS);
    let centers = coarse.points();
    let one = |q: &nalgebra::Vector3<T>| -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        for (c, p) in centers.iter().zip(probs) {
            let d = (q - c).norm();
            if d < eps {
                return *p;
            }
            let w = T::one() / (d + eps);
            num += w * *p;
            den += w;
        }
        (num / den).max(T::zero()).min(T::one())
    };
    Ok(if full.len() * centers.len() > 1 << 16 {
        full.points().par_iter().map(one).collect()
    } else {
        full.points().iter().map(one).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse(pts: &[[f64; 3]], probs: &[f64]) -> PointCloud<f64> {
        PointCloud::from_slice(pts).unwrap().with_probs(probs.to_vec()).unwrap()
    }

    #[test]
    fn coincident_query_returns_probability() {
        let c = coarse(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], &[0.7, 0.1]);
        let q = PointCloud::from_slice(&[[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(interpolate_probabilities(&c, &q).unwrap(), vec![0.7]);
    }

    #[test]
    fn midpoint_is_average() {
        let c = coarse(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]], &[0.0, 1.0]);
        let q = PointCloud::from_slice(&[[1.0, 0.0, 0.0]]).unwrap();
        assert!((interpolate_probabilities(&c, &q).unwrap()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inverse_distance_hand_value() {
        // Distances 1 and 2: (1·0 + 0.5·0.9) / 1.5 = 0.3.
        let c = coarse(&[[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]], &[0.0, 0.9]);
        let q = PointCloud::from_slice(&[[1.0, 0.0, 0.0]]).unwrap();
        assert!((interpolate_probabilities(&c, &q).unwrap()[0] - 0.3).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let q = PointCloud::from_slice(&[[1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(
            interpolate_probabilities(&PointCloud::<f64>::empty(), &q),
            Err(SamplingError::EmptyCoarse)
        );
        let no_probs = PointCloud::from_slice(&[[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(
            interpolate_probabilities(&no_probs, &q),
            Err(SamplingError::MissingProbabilities)
        );
    }

    #[test]
    fn output_within_coarse_range() {
        let c = coarse(
            &[[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 2.0, 1.0]],
            &[0.2, 0.6, 0.4],
        );
        let q = PointCloud::from_slice(&[[0.3, 0.1, 0.0], [5.0, 5.0, 5.0], [0.0, 1.9, 1.0]]).unwrap();
        for p in interpolate_probabilities(&c, &q).unwrap() {
            assert!((0.2..=0.6).contains(&p));
        }
    }
}
