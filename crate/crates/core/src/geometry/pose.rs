use nalgebra::{Matrix3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::Scalar;

/// Rotation + translation mapping model-frame points to the camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct RigidPose<T: Scalar> {
    pub rotation: Matrix3<T>,
    pub translation: Vector3<T>,
}

impl<T: Scalar> RigidPose<T> {
    /// Builds a pose after checking `RᵀR = I` and `det R = +1`.
    pub fn new(rotation: Matrix3<T>, translation: Vector3<T>) -> Result<Self, GeometryError> {
        let pose = Self {
            rotation,
            translation,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn from_parts_unchecked(rotation: Matrix3<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation by `angle` radians about `axis` (normalised internally).
    pub fn from_axis_angle(axis: &Vector3<T>, angle: T, translation: Vector3<T>) -> Self {
        let axis = Unit::new_normalize(*axis);
        let rotation = *UnitQuaternion::from_axis_angle(&axis, angle)
            .to_rotation_matrix()
            .matrix();
        Self {
            rotation,
            translation,
        }
    }

    /// Rotation from a (not necessarily unit) quaternion `w + xi + yj + zk`.
    pub fn from_quaternion(w: T, x: T, y: T, z: T, translation: Vector3<T>) -> Self {
        let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z));
        Self {
            rotation: *q.to_rotation_matrix().matrix(),
            translation,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let tol = T::orthonormal_tolerance();
        if self.rotation.iter().chain(self.translation.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidPose("non-finite entry".into()));
        }
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        let off = gram.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if off > tol {
            return Err(GeometryError::InvalidPose(format!(
                "rotation not orthonormal (max |RᵀR - I| = {:e})",
                off.as_f64()
            )));
        }
        let det = self.rotation.determinant();
        if (det - T::one()).abs() > tol {
            return Err(GeometryError::InvalidPose(format!(
                "rotation determinant {} != +1",
                det.as_f64()
            )));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidPose<T>) -> RigidPose<T> {
        RigidPose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidPose<T> {
        let rt = self.rotation.transpose();
        RigidPose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Geodesic angle (radians) between the two rotations.
    ///
    /// Evaluated as `atan2(|vee(Δ - Δᵀ)| / 2, (tr Δ - 1) / 2)` with
    /// `Δ = R_selfᵀ R_other`, which stays accurate for tiny angles where the
    /// `acos` form loses all precision.
    pub fn rotation_error(&self, other: &RigidPose<T>) -> T {
        rotation_angle(&(self.rotation.transpose() * other.rotation))
    }

    pub fn translation_error(&self, other: &RigidPose<T>) -> T {
        (self.translation - other.translation).norm()
    }

    pub fn cast<U: Scalar>(&self) -> RigidPose<U> {
        RigidPose {
            rotation: self.rotation.map(|v| U::lit(v.as_f64())),
            translation: self.translation.map(|v| U::lit(v.as_f64())),
        }
    }

    /// Projects an arbitrary 3×3 matrix onto SO(3) (closest rotation in the
    /// Frobenius norm).
    pub fn nearest_rotation(m: &Matrix3<T>) -> Matrix3<T> {
        let svd = m.svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let mut d = Matrix3::identity();
        if (u * v_t).determinant() < T::zero() {
            let (k, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .fold((0, svd.singular_values[0]), |(bk, bv), (k, v)| {
                    if *v < bv {
                        (k, *v)
                    } else {
                        (bk, bv)
                    }
                });
            d[(k, k)] = -T::one();
        }
        u * d * v_t
    }
}

impl<T: Scalar> Default for RigidPose<T> {
    fn default() -> Self {
        Self::identity()
    }
}

pub(crate) fn rotation_angle<T: Scalar>(delta: &Matrix3<T>) -> T {
    let two = T::lit(2.0);
    let sin_axis = Vector3::new(
        delta[(2, 1)] - delta[(1, 2)],
        delta[(0, 2)] - delta[(2, 0)],
        delta[(1, 0)] - delta[(0, 1)],
    );
    let s = sin_axis.norm() / two;
    let c = (delta.trace() - T::one()) / two;
    s.atan2(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_is_valid() {
        assert!(RigidPose::<f64>::identity().is_valid());
        assert!(RigidPose::<f32>::identity().is_valid());
    }

    #[test]
    fn reflection_rejected() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            RigidPose::new(m, Vector3::zeros()),
            Err(GeometryError::InvalidPose(_))
        ));
    }

    #[test]
    fn scaled_matrix_rejected() {
        let m = Matrix3::identity() * 1.001;
        assert!(RigidPose::new(m, Vector3::<f64>::zeros()).is_err());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let p = RigidPose::from_axis_angle(&Vector3::new(0.3, -1.0, 0.2), 1.1, Vector3::new(0.1, 2.0, -0.5));
        let id = p.compose(&p.inverse());
        assert!(id.rotation_error(&RigidPose::identity()) < 1e-14);
        assert!(id.translation.norm() < 1e-14);
    }

    #[test]
    fn small_angle_error_is_accurate() {
        let a = RigidPose::<f64>::identity();
        let b = RigidPose::from_axis_angle(&Vector3::z(), 1e-10, Vector3::zeros());
        let err = a.rotation_error(&b);
        assert!((err - 1e-10).abs() < 1e-20, "{err}");
        let c = RigidPose::from_axis_angle(&Vector3::x(), FRAC_PI_2, Vector3::zeros());
        assert!((a.rotation_error(&c) - FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn nearest_rotation_repairs_rounded_matrix() {
        let p = RigidPose::<f64>::from_axis_angle(&Vector3::new(1.0, 2.0, 3.0), 0.7, Vector3::zeros());
        let rounded = p.rotation.map(|v| (v * 1e4).round() / 1e4);
        let fixed = RigidPose::nearest_rotation(&rounded);
        assert!(RigidPose::new(fixed, Vector3::zeros()).is_ok());
        assert!((fixed - p.rotation).abs().max() < 1e-4);
    }
}
