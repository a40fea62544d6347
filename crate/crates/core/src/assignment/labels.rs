use super::AssignmentError;
use crate::geometry::{nearest_neighbors_points, PointCloud, RigidPose};
use crate::Scalar;

/// Match-distance threshold (meters) for ground-truth labels.
pub const DEFAULT_DELTA_DIS: f64 = 0.15;

/// Per-point labels: 0 addresses the token (background or occluded), `j >= 1`
/// the 1-based index of the matched point on the opposite side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    max: usize,
}

impl LabelVector {
    /// `max` is the size of the opposite point set.
    pub fn new(labels: Vec<usize>, max: usize) -> Result<Self, AssignmentError> {
        if let Some(index) = labels.iter().position(|&l| l > max) {
            return Err(AssignmentError::LabelOutOfRange {
                index,
                label: labels[index],
                max,
            });
        }
        Ok(Self { labels, max })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn max(&self) -> usize {
        self.max
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of labels pointing at the token.
    pub fn unmatched(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 0).count()
    }
}

/// Nearest-neighbour labels under the ground-truth pose.
///
/// Observation points are mapped into the model frame with the inverse of
/// `gt_pose`; observation `i` gets label `m* + 1` when its nearest model
/// point `m*` lies closer than `delta_dis`, else 0 (background). Model labels
/// are built the same way against the mapped observations, 0 meaning occluded.
pub fn ground_truth_labels<T: Scalar>(
    obs: &PointCloud<T>,
    model: &PointCloud<T>,
    gt_pose: &RigidPose<T>,
    delta_dis: T,
) -> Result<(LabelVector, LabelVector), AssignmentError> {
    if obs.is_empty() {
        return Err(AssignmentError::Empty("observation cloud"));
    }
    if model.is_empty() {
        return Err(AssignmentError::Empty("model cloud"));
    }
    if !(delta_dis.is_finite() && delta_dis > T::zero()) {
        return Err(AssignmentError::InvalidThreshold(delta_dis.as_f64()));
    }
    gt_pose.validate()?;
    let to_model = gt_pose.inverse();
    let mapped: Vec<_> = obs.points().iter().map(|p| to_model.apply(p)).collect();
    let label = |(idx, d): (Vec<usize>, Vec<T>)| -> Vec<usize> {
        idx.into_iter()
            .zip(d)
            .map(|(j, d)| if d < delta_dis { j + 1 } else { 0 })
            .collect()
    };
    let y_o = label(nearest_neighbors_points(&mapped, model.points())?);
    let y_m = label(nearest_neighbors_points(model.points(), &mapped)?);
    Ok((LabelVector::new(y_o, model.len())?, LabelVector::new(y_m, obs.len())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gt() -> RigidPose<f64> {
        RigidPose::from_axis_angle(&Vector3::new(1.0, 2.0, -0.5), 0.8, Vector3::new(0.1, -0.2, 0.7))
    }

    fn random_cloud(n: usize, seed: u64) -> PointCloud<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(
            (0..n)
                .map(|_| Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_alignment_labels_are_identity() {
        let model = random_cloud(30, 1);
        let obs = model.transformed(&gt());
        let (yo, ym) = ground_truth_labels(&obs, &model, &gt(), DEFAULT_DELTA_DIS).unwrap();
        let expect: Vec<usize> = (1..=30).collect();
        assert_eq!(yo.labels(), &expect[..]);
        assert_eq!(ym.labels(), &expect[..]);
        // Composing the two directions returns every matched point to itself.
        for (i, &l) in yo.labels().iter().enumerate() {
            assert_eq!(ym.labels()[l - 1], i + 1);
        }
    }

    #[test]
    fn displaced_point_is_background() {
        let model = PointCloud::from_slice(&[[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]]).unwrap();
        let obs = PointCloud::from_slice(&[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let (yo, ym) = ground_truth_labels(&obs, &model, &RigidPose::identity(), 0.15).unwrap();
        assert_eq!(yo.labels(), &[1, 0]);
        assert_eq!(ym.labels(), &[1, 1]);
    }

    #[test]
    fn matches_double_loop_oracle() {
        let model = random_cloud(20, 7);
        let pose = gt();
        let mut obs_pts: Vec<Vector3<f64>> = model.transformed(&pose).points().to_vec();
        // Plant five outliers 0.5 m off the surface along +z in the model frame.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for k in 0..5 {
            let i = k * 4 + rng.random_range(0..4);
            let m = model.points()[i] + Vector3::new(0.0, 0.0, 0.5);
            obs_pts[i] = pose.apply(&m);
        }
        let obs = PointCloud::new(obs_pts).unwrap();
        let (yo, ym) = ground_truth_labels(&obs, &model, &pose, 0.15).unwrap();

        let back: Vec<Vector3<f64>> = obs
            .points()
            .iter()
            .map(|p| pose.rotation.transpose() * (p - pose.translation))
            .collect();
        let oracle = |from: &[Vector3<f64>], to: &[Vector3<f64>]| -> Vec<usize> {
            from.iter()
                .map(|a| {
                    let mut best = (f64::INFINITY, 0);
                    for (j, b) in to.iter().enumerate() {
                        let d = (a - b).norm();
                        if d < best.0 {
                            best = (d, j);
                        }
                    }
                    if best.0 < 0.15 {
                        best.1 + 1
                    } else {
                        0
                    }
                })
                .collect()
        };
        assert_eq!(yo.labels(), &oracle(&back, model.points())[..]);
        assert_eq!(ym.labels(), &oracle(model.points(), &back)[..]);
        assert!(yo.unmatched() >= 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = PointCloud::from_slice(&[[0.0, 0.0, 0.0]]).unwrap();
        let id = RigidPose::identity();
        assert!(ground_truth_labels(&PointCloud::empty(), &c, &id, 0.15).is_err());
        assert!(ground_truth_labels(&c, &c, &id, 0.0).is_err());
        assert!(LabelVector::new(vec![0, 3], 2).is_err());
    }
}
