use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{BinaryMask, DepthImage, GeometryError, PointCloud};
use crate::Scalar;

/// Pinhole intrinsics; pixel `(u, v)` has its center at integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct CameraIntrinsics<T: Scalar> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Scalar> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: usize, height: usize) -> Result<Self, GeometryError> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite {
            return Err(GeometryError::InvalidIntrinsics("non-finite parameter".into()));
        }
        if self.fx <= T::zero() || self.fy <= T::zero() {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx.as_f64(),
                self.fy.as_f64()
            )));
        }
        let (w, h) = (T::lit(self.width as f64), T::lit(self.height as f64));
        if self.cx < T::zero() || self.cx >= w || self.cy < T::zero() || self.cy >= h {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx.as_f64(),
                self.cy.as_f64(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> CameraIntrinsics<U> {
        CameraIntrinsics {
            fx: U::lit(self.fx.as_f64()),
            fy: U::lit(self.fy.as_f64()),
            cx: U::lit(self.cx.as_f64()),
            cy: U::lit(self.cy.as_f64()),
            width: self.width,
            height: self.height,
        }
    }

    #[inline]
    pub fn project_point(&self, p: &Vector3<T>) -> [T; 2] {
        [self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy]
    }

    #[inline]
    pub fn backproject_pixel(&self, u: T, v: T, z: T) -> Vector3<T> {
        Vector3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }
}

/// Lifts masked, valid depth pixels to a camera-frame point cloud in
/// row-major pixel order.
pub fn backproject<T: Scalar>(
    depth: &DepthImage,
    mask: &BinaryMask,
    intrinsics: &CameraIntrinsics<T>,
) -> Result<PointCloud<T>, GeometryError> {
    intrinsics.validate()?;
    if !mask.same_size(depth.width(), depth.height()) {
        return Err(GeometryError::DimensionMismatch {
            expected: (depth.width(), depth.height()),
            found: (mask.width(), mask.height()),
        });
    }
    if intrinsics.width != depth.width() || intrinsics.height != depth.height() {
        return Err(GeometryError::DimensionMismatch {
            expected: (intrinsics.width, intrinsics.height),
            found: (depth.width(), depth.height()),
        });
    }
    let mut points = Vec::new();
    for v in 0..depth.height() {
        for u in 0..depth.width() {
            let z = depth.get(u, v);
            if mask.get(u, v) && z > 0.0 {
                points.push(intrinsics.backproject_pixel(
                    T::lit(u as f64),
                    T::lit(v as f64),
                    T::lit(z),
                ));
            }
        }
    }
    PointCloud::new(points)
}

/// Pinhole projection of every point; fails if any point has `z <= 0`.
pub fn project<T: Scalar>(
    intrinsics: &CameraIntrinsics<T>,
    cloud: &PointCloud<T>,
) -> Result<Vec<[T; 2]>, GeometryError> {
    let behind: Vec<usize> = cloud
        .points()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.z <= T::zero())
        .map(|(i, _)| i)
        .collect();
    if !behind.is_empty() {
        return Err(GeometryError::BehindCamera { indices: behind });
    }
    Ok(cloud.points().iter().map(|p| intrinsics.project_point(p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(100.0, 100.0, 50.0, 40.0, 100, 80).unwrap()
    }

    #[test]
    fn principal_point_ray() {
        let mut d = DepthImage::zeros(100, 80);
        d.set(50, 40, 1.0);
        let c = backproject(&d, &BinaryMask::full(100, 80), &k()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.points()[0], Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn unit_tangent_ray_scales_with_depth() {
        let k = CameraIntrinsics::new(20.0, 20.0, 10.0, 10.0, 40, 20).unwrap();
        let mut d = DepthImage::zeros(40, 20);
        d.set(30, 10, 2.0);
        let c = backproject(&d, &BinaryMask::full(40, 20), &k).unwrap();
        assert_eq!(c.points()[0], Vector3::new(2.0, 0.0, 2.0));
    }

    #[test]
    fn two_by_two_matches_closed_form() {
        let k = CameraIntrinsics::new(100.0, 100.0, 0.5, 0.5, 2, 2).unwrap();
        let d = DepthImage::filled(2, 2, 1.0).unwrap();
        let c = backproject(&d, &BinaryMask::full(2, 2), &k).unwrap();
        // Row-major scan: (0,0), (1,0), (0,1), (1,1); x = (u - 0.5) / 100.
        let expected: [[f64; 3]; 4] = [
            [-0.005, -0.005, 1.0],
            [0.005, -0.005, 1.0],
            [-0.005, 0.005, 1.0],
            [0.005, 0.005, 1.0],
        ];
        assert_eq!(c.len(), 4);
        for (p, e) in c.points().iter().zip(expected) {
            for a in 0..3 {
                assert!((p[a] - e[a]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn masked_and_invalid_pixels_skipped() {
        let d = DepthImage::new(2, 1, vec![0.0, 1.0]).unwrap();
        let all = backproject(&d, &BinaryMask::full(2, 1), &CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 2, 1).unwrap()).unwrap();
        assert_eq!(all.len(), 1);
        let none = backproject(&d, &BinaryMask::empty(2, 1), &CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 2, 1).unwrap()).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let d = DepthImage::zeros(100, 80);
        assert!(matches!(
            backproject(&d, &BinaryMask::full(10, 10), &k()),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_intrinsics_rejected() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0, 2, 2).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 2.0, 0.0, 2, 2).is_err());
    }

    #[test]
    fn projection_examples() {
        let c = PointCloud::from_slice(&[[0.0, 0.0, 1.0], [1.0, 0.0, 1.0]]).unwrap();
        let uv = project(&k(), &c).unwrap();
        assert_eq!(uv[0], [50.0, 40.0]);
        assert_eq!(uv[1][0], 150.0);
    }

    #[test]
    fn projection_rejects_points_behind() {
        let c = PointCloud::from_slice(&[[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 1.0, -2.0]]).unwrap();
        assert_eq!(
            project(&k(), &c),
            Err(GeometryError::BehindCamera { indices: vec![1, 2] })
        );
    }

    #[test]
    fn project_backproject_round_trip() {
        let k = CameraIntrinsics::new(525.0, 530.0, 319.5, 239.5, 640, 480).unwrap();
        let d = DepthImage::new(
            640,
            480,
            (0..640 * 480).map(|i| 0.5 + (i % 97) as f64 * 0.01).collect(),
        )
        .unwrap();
        let mask = BinaryMask::from_fn(640, 480, |u, v| (u + 3 * v) % 7 == 0);
        let c = backproject(&d, &mask, &k).unwrap();
        let uv = project(&k, &c).unwrap();
        let pixels: Vec<(usize, usize)> = (0..480)
            .flat_map(|v| (0..640).map(move |u| (u, v)))
            .filter(|(u, v)| mask.get(*u, *v))
            .collect();
        assert_eq!(pixels.len(), uv.len());
        for ((u, v), p) in pixels.iter().zip(uv) {
            assert!((p[0] - *u as f64).abs() < 1e-9);
            assert!((p[1] - *v as f64).abs() < 1e-9);
        }
    }
}
