use nalgebra::{Matrix3, Vector3};

use super::{GeometryError, PointCloud, RigidPose};
use crate::Scalar;

/// Weighted least-squares rigid transform `dst ≈ R src + t` (Kabsch/Umeyama
/// without scale).
///
/// Reflections are removed by flipping the singular vector of the smallest
/// singular value, so planar inputs still yield a proper rotation.
/// Rank-deficient cross-covariances (fewer than three weighted points,
/// collinear configurations) are reported as [`GeometryError::Degenerate`].
pub fn solve_pose_weighted_svd<T: Scalar>(
    src: &PointCloud<T>,
    dst: &PointCloud<T>,
    weights: &[T],
) -> Result<RigidPose<T>, GeometryError> {
    solve_pose_pairs(src.points(), dst.points(), weights)
}

/// Slice form of [`solve_pose_weighted_svd`].
pub fn solve_pose_pairs<T: Scalar>(
    src: &[Vector3<T>],
    dst: &[Vector3<T>],
    weights: &[T],
) -> Result<RigidPose<T>, GeometryError> {
    if src.len() != dst.len() || src.len() != weights.len() {
        return Err(GeometryError::LengthMismatch {
            src: src.len(),
            dst: dst.len(),
            weights: weights.len(),
        });
    }
    if src.len() < 3 {
        return Err(GeometryError::TooFewPoints {
            needed: 3,
            found: src.len(),
        });
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < T::zero()) {
        return Err(GeometryError::InvalidWeights(format!(
            "weight {} at index {i} is negative or not finite",
            weights[i].as_f64()
        )));
    }
    let total = weights.iter().fold(T::zero(), |a, w| a + *w);
    if total <= T::zero() {
        return Err(GeometryError::InvalidWeights("weights sum to zero".into()));
    }

    let mut src_c = Vector3::zeros();
    let mut dst_c = Vector3::zeros();
    for ((s, d), w) in src.iter().zip(dst).zip(weights) {
        src_c += s * *w;
        dst_c += d * *w;
    }
    src_c /= total;
    dst_c /= total;

    let mut cov = Matrix3::zeros();
    for ((s, d), w) in src.iter().zip(dst).zip(weights) {
        if *w == T::zero() {
            continue;
        }
        cov += (s - src_c) * (d - dst_c).transpose() * *w;
    }

    let svd = cov.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let sv = svd.singular_values;

    let mut order = [0usize, 1, 2];
    order.sort_by(|a, b| sv[*b].partial_cmp(&sv[*a]).unwrap_or(std::cmp::Ordering::Equal));
    let (s1, s2) = (sv[order[0]], sv[order[1]]);
    let rel_tol = T::default_epsilon().sqrt();
    if !(s1 > T::zero()) || s2 <= s1 * rel_tol {
        return Err(GeometryError::Degenerate {
            singular_values: [sv[order[0]].as_f64(), sv[order[1]].as_f64(), sv[order[2]].as_f64()],
        });
    }

    let v = v_t.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < T::zero() {
        let k = order[2];
        d[(k, k)] = -T::one();
    }
    let rotation = v * d * u.transpose();
    let translation = dst_c - rotation * src_c;
    Ok(RigidPose::from_parts_unchecked(rotation, translation))
}
