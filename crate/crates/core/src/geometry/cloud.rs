use nalgebra::{DMatrix, Vector3};

use super::{GeometryError, RigidPose};
use crate::Scalar;

/// N×3 point set with optional per-point feature rows and probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T: Scalar> {
    points: Vec<Vector3<T>>,
    features: Option<DMatrix<T>>,
    probs: Option<Vec<T>>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(points: Vec<Vector3<T>>) -> Result<Self, GeometryError> {
        if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(GeometryError::InvalidCloud(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        Ok(Self {
            points,
            features: None,
            probs: None,
        })
    }

    pub fn empty() -> Self {
        Self {
            points: Vec::new(),
            features: None,
            probs: None,
        }
    }

    pub fn from_slice(points: &[[T; 3]]) -> Result<Self, GeometryError> {
        Self::new(points.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect())
    }

    /// Attaches an N×C feature matrix.
    pub fn with_features(mut self, features: DMatrix<T>) -> Result<Self, GeometryError> {
        if features.nrows() != self.points.len() {
            return Err(GeometryError::InvalidCloud(format!(
                "{} feature rows for {} points",
                features.nrows(),
                self.points.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidCloud("non-finite feature".into()));
        }
        self.features = Some(features);
        Ok(self)
    }

    pub fn with_probs(mut self, probs: Vec<T>) -> Result<Self, GeometryError> {
        if probs.len() != self.points.len() {
            return Err(GeometryError::InvalidCloud(format!(
                "{} probabilities for {} points",
                probs.len(),
                self.points.len()
            )));
        }
        if let Some(i) = probs
            .iter()
            .position(|p| !(p.is_finite() && *p >= T::zero() && *p <= T::one()))
        {
            return Err(GeometryError::InvalidCloud(format!(
                "probability {} at index {i} outside [0, 1]",
                probs[i].as_f64()
            )));
        }
        self.probs = Some(probs);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector3<T>] {
        &self.points
    }

    pub fn features(&self) -> Option<&DMatrix<T>> {
        self.features.as_ref()
    }

    pub fn probs(&self) -> Option<&[T]> {
        self.probs.as_deref()
    }

    /// Sub-cloud at `indices`, carrying features and probabilities along.
    pub fn select(&self, indices: &[usize]) -> PointCloud<T> {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            features: self.features.as_ref().map(|f| f.select_rows(indices)),
            probs: self
                .probs
                .as_ref()
                .map(|p| indices.iter().map(|&i| p[i]).collect()),
        }
    }

    pub fn centroid(&self) -> Option<Vector3<T>> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc: Vector3<T>, p| acc + p);
        Some(sum / T::lit(self.points.len() as f64))
    }

    /// Diagonal length of the axis-aligned bounding box; 0 when empty.
    pub fn extent(&self) -> T {
        let Some(first) = self.points.first() else {
            return T::zero();
        };
        let (lo, hi) = self.points.iter().fold((*first, *first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        (hi - lo).norm()
    }

    /// Concatenates point sets; extra channels are dropped unless both
    /// sides carry them.
    pub fn concat(&self, other: &PointCloud<T>) -> PointCloud<T> {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let probs = match (&self.probs, &other.probs) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        let features = match (&self.features, &other.features) {
            (Some(a), Some(b)) if a.ncols() == b.ncols() => {
                let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
                m.rows_mut(0, a.nrows()).copy_from(a);
                m.rows_mut(a.nrows(), b.nrows()).copy_from(b);
                Some(m)
            }
            _ => None,
        };
        PointCloud {
            points,
            features,
            probs,
        }
    }

    pub fn cast<U: Scalar>(&self) -> PointCloud<U> {
        let conv = |v: &T| U::lit(v.as_f64());
        PointCloud {
            points: self.points.iter().map(|p| p.map(|c| conv(&c))).collect(),
            features: self.features.as_ref().map(|f| f.map(|c| conv(&c))),
            probs: self.probs.as_ref().map(|p| p.iter().map(conv).collect()),
        }
    }

    pub fn transformed(&self, pose: &RigidPose<T>) -> PointCloud<T> {
        transform(pose, self)
    }
}

/// Maps every point through `pose` (`R p + t`); features and probabilities
/// are carried unchanged.
pub fn transform<T: Scalar>(pose: &RigidPose<T>, cloud: &PointCloud<T>) -> PointCloud<T> {
    PointCloud {
        points: cloud.points.iter().map(|p| pose.apply(p)).collect(),
        features: cloud.features.clone(),
        probs: cloud.probs.clone(),
    }
}
