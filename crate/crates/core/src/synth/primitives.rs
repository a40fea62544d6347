use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::geometry::{PointCloud, RigidPose};
use crate::sampling::SamplerSeed;
use crate::{Cloud, Pose};

/// Discrete axial steps in a cylinder's symmetry set.
pub const CYLINDER_SYMMETRY_STEPS: usize = 36;

/// Grid spacing (meters) of the dense cloud used for rendering.
pub const RENDER_SPACING: f64 = 1e-3;

const MAX_RENDER_POINTS: usize = 1_000_000;

/// Closed surfaces centred at the origin; planes lie in `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    Box { x: f64, y: f64, z: f64 },
    Sphere { diameter: f64 },
    Cylinder { radius: f64, height: f64 },
    Plane { width: f64, height: f64 },
}

impl Primitive {
    pub fn validate(&self) -> Result<(), SynthError> {
        let dims: &[f64] = match self {
            Primitive::Box { x, y, z } => &[*x, *y, *z],
            Primitive::Sphere { diameter } => &[*diameter],
            Primitive::Cylinder { radius, height } => &[*radius, *height],
            Primitive::Plane { width, height } => &[*width, *height],
        };
        if dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            Ok(())
        } else {
            Err(SynthError::InvalidPrimitive(format!("dimensions must be positive: {self:?}")))
        }
    }

    /// Largest distance between two surface points.
    pub fn diameter(&self) -> f64 {
        match *self {
            Primitive::Box { x, y, z } => (x * x + y * y + z * z).sqrt(),
            Primitive::Sphere { diameter } => diameter,
            Primitive::Cylinder { radius, height } => ((2.0 * radius).powi(2) + height * height).sqrt(),
            Primitive::Plane { width, height } => (width * width + height * height).sqrt(),
        }
    }

    fn area(&self) -> f64 {
        match *self {
            Primitive::Box { x, y, z } => 2.0 * (x * y + y * z + x * z),
            Primitive::Sphere { diameter } => PI * diameter * diameter,
            Primitive::Cylinder { radius, height } => TAU * radius * height + 2.0 * PI * radius * radius,
            Primitive::Plane { width, height } => width * height,
        }
    }

    /// Surface patches, each a map from the unit square onto the surface
    /// that preserves area up to a constant factor, plus its area.
    fn patches(&self) -> Vec<(f64, Patch)> {
        match *self {
            Primitive::Box { x, y, z } => {
                let (hx, hy, hz) = (x / 2.0, y / 2.0, z / 2.0);
                let mut out = Vec::new();
                for s in [-1.0, 1.0] {
                    out.push((y * z, Patch::Rect { origin: Vector3::new(s * hx, -hy, -hz), u: Vector3::new(0.0, y, 0.0), v: Vector3::new(0.0, 0.0, z) }));
                    out.push((x * z, Patch::Rect { origin: Vector3::new(-hx, s * hy, -hz), u: Vector3::new(x, 0.0, 0.0), v: Vector3::new(0.0, 0.0, z) }));
                    out.push((x * y, Patch::Rect { origin: Vector3::new(-hx, -hy, s * hz), u: Vector3::new(x, 0.0, 0.0), v: Vector3::new(0.0, y, 0.0) }));
                }
                out
            }
            Primitive::Sphere { diameter } => vec![(self.area(), Patch::Sphere { r: diameter / 2.0 })],
            Primitive::Cylinder { radius, height } => vec![
                (TAU * radius * height, Patch::Tube { r: radius, h: height }),
                (PI * radius * radius, Patch::Disk { r: radius, z: -height / 2.0 }),
                (PI * radius * radius, Patch::Disk { r: radius, z: height / 2.0 }),
            ],
            Primitive::Plane { width, height } => vec![(
                width * height,
                Patch::Rect { origin: Vector3::new(-width / 2.0, -height / 2.0, 0.0), u: Vector3::new(width, 0.0, 0.0), v: Vector3::new(0.0, height, 0.0) },
            )],
        }
    }

    /// Proper rotations mapping the surface onto itself; identity first.
    fn symmetries(&self) -> Vec<Matrix3<f64>> {
        match *self {
            Primitive::Box { x, y, z } => extent_preserving_rotations([x, y, z]),
            Primitive::Plane { width, height } => extent_preserving_rotations([width, height, 0.0]),
            Primitive::Sphere { .. } => vec![Matrix3::identity()],
            Primitive::Cylinder { .. } => {
                let flip = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);
                let mut out = Vec::with_capacity(2 * CYLINDER_SYMMETRY_STEPS);
                for f in [Matrix3::identity(), flip] {
                    for k in 0..CYLINDER_SYMMETRY_STEPS {
                        let a = TAU * k as f64 / CYLINDER_SYMMETRY_STEPS as f64;
                        let (s, c) = if k == 0 { (0.0, 1.0) } else { a.sin_cos() };
                        out.push(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0) * f);
                    }
                }
                out
            }
        }
    }
}

/// Signed permutation matrices with determinant +1 that map the box
/// half-extents onto themselves.
fn extent_preserving_rotations(dims: [f64; 3]) -> Vec<Matrix3<f64>> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::new();
    for perm in PERMS {
        if (0..3).any(|i| dims[perm[i]] != dims[i]) {
            continue;
        }
        for signs in 0..8u32 {
            let mut m = Matrix3::zeros();
            for i in 0..3 {
                m[(i, perm[i])] = if signs >> i & 1 == 1 { -1.0 } else { 1.0 };
            }
            if m.determinant() > 0.0 {
                out.push(m);
            }
        }
    }
    out.sort_by_key(|m| *m != Matrix3::identity());
    out
}

#[derive(Debug, Clone, Copy)]
enum Patch {
    Rect { origin: Vector3<f64>, u: Vector3<f64>, v: Vector3<f64> },
    Sphere { r: f64 },
    Tube { r: f64, h: f64 },
    Disk { r: f64, z: f64 },
}

impl Patch {
    fn at(&self, a: f64, b: f64) -> Vector3<f64> {
        match *self {
            Patch::Rect { origin, u, v } => origin + u * a + v * b,
            Patch::Sphere { r } => {
                let z = r * (2.0 * a - 1.0);
                let rho = (r * r - z * z).max(0.0).sqrt();
                let (s, c) = (TAU * b).sin_cos();
                Vector3::new(rho * c, rho * s, z)
            }
            Patch::Tube { r, h } => {
                let (s, c) = (TAU * a).sin_cos();
                Vector3::new(r * c, r * s, h * (b - 0.5))
            }
            Patch::Disk { r, z } => {
                let rho = r * a.sqrt();
                let (s, c) = (TAU * b).sin_cos();
                Vector3::new(rho * c, rho * s, z)
            }
        }
    }

    /// Unit surface normal at `at(a, b)`; orientation is arbitrary.
    fn normal(&self, a: f64, b: f64) -> Vector3<f64> {
        match *self {
            Patch::Rect { u, v, .. } => u.cross(&v).normalize(),
            Patch::Sphere { .. } => {
                let p = self.at(a, b);
                let n = p.norm();
                if n > 0.0 {
                    p / n
                } else {
                    Vector3::z()
                }
            }
            Patch::Tube { .. } => {
                let (s, c) = (TAU * a).sin_cos();
                Vector3::new(c, s, 0.0)
            }
            Patch::Disk { .. } => Vector3::z(),
        }
    }

    /// Side lengths of the parameter rectangle on the surface, used to pick
    /// grid aspect ratios.
    fn aspect(&self) -> (f64, f64) {
        match *self {
            Patch::Rect { u, v, .. } => (u.norm(), v.norm()),
            Patch::Sphere { r } => (2.0 * r, PI * r),
            Patch::Tube { r, h } => (TAU * r, h),
            Patch::Disk { r, .. } => (r, TAU * r * 0.5),
        }
    }

    fn grid(&self, n: usize) -> (usize, usize) {
        let (lu, lv) = self.aspect();
        let gu = ((n as f64 * lu / lv).sqrt().round() as usize).max(1);
        let gv = n.div_ceil(gu).max(1);
        (gu, gv)
    }
}

/// Splits `n` proportionally to `weights` (largest remainder, ties to the
/// earlier entry).
fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Object model with exact diameter and symmetry set.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel {
    pub primitive: Primitive,
    /// Stratified surface samples in the model frame (meters).
    pub cloud: Cloud,
    /// Dense regular surface grid used by the renderer.
    pub render_cloud: Cloud,
    /// Unit normals of `render_cloud` (arbitrary orientation).
    pub render_normals: Vec<Vector3<f64>>,
    pub diameter: f64,
    /// Discrete symmetry transforms, identity first.
    pub symmetries: Vec<Pose>,
    /// True when the shape also has a continuous symmetry not captured by
    /// `symmetries` (spheres).
    pub continuous: bool,
}

/// Surface model of a primitive with `points` jittered-stratified samples.
///
/// The surface is split into patches with sample counts proportional to
/// area; each patch draws one uniform point from `points` distinct cells of
/// a near-square grid over its area-preserving parametrisation.
pub fn make_primitive_model(shape: &Primitive, points: usize, seed: SamplerSeed) -> Result<ObjectModel, SynthError> {
    shape.validate()?;
    if points == 0 {
        return Err(SynthError::InvalidPrimitive("points per model must be positive".into()));
    }
    let patches = shape.patches();
    let counts = apportion(points, &patches.iter().map(|p| p.0).collect::<Vec<_>>());
    let mut rng = seed.rng();
    let mut pts = Vec::with_capacity(points);
    for ((_, patch), n) in patches.iter().zip(counts) {
        if n == 0 {
            continue;
        }
        let (gu, gv) = patch.grid(n);
        let mut cells: Vec<usize> = (0..gu * gv).collect();
        cells.shuffle(&mut rng);
        cells.truncate(n);
        cells.sort_unstable();
        for c in cells {
            let a = ((c % gu) as f64 + rng.random::<f64>()) / gu as f64;
            let b = ((c / gu) as f64 + rng.random::<f64>()) / gv as f64;
            pts.push(patch.at(a, b));
        }
    }
    let (render_cloud, render_normals) = render_grid(shape)?;
    Ok(ObjectModel {
        primitive: *shape,
        cloud: PointCloud::new(pts)?,
        render_cloud,
        render_normals,
        diameter: shape.diameter(),
        symmetries: shape
            .symmetries()
            .into_iter()
            .map(|r| RigidPose::from_parts_unchecked(r, Vector3::zeros()))
            .collect(),
        continuous: matches!(shape, Primitive::Sphere { .. }),
    })
}

/// Cell-centred grid with roughly [`RENDER_SPACING`] between samples.
fn render_grid(shape: &Primitive) -> Result<(Cloud, Vec<Vector3<f64>>), SynthError> {
    let target = ((shape.area() / (RENDER_SPACING * RENDER_SPACING)).ceil() as usize).clamp(1, MAX_RENDER_POINTS);
    let patches = shape.patches();
    let counts = apportion(target, &patches.iter().map(|p| p.0).collect::<Vec<_>>());
    let mut pts = Vec::with_capacity(target);
    let mut normals = Vec::with_capacity(target);
    for ((_, patch), n) in patches.iter().zip(counts) {
        if n == 0 {
            continue;
        }
        let (gu, gv) = patch.grid(n);
        for j in 0..gv {
            for i in 0..gu {
                let (a, b) = ((i as f64 + 0.5) / gu as f64, (j as f64 + 0.5) / gv as f64);
                pts.push(patch.at(a, b));
                normals.push(patch.normal(a, b));
            }
        }
    }
    Ok((PointCloud::new(pts)?, normals))
}

impl ObjectModel {
    /// Rebuilds a model from its primitive, keeping a given sample cloud
    /// (for instance one read back from disk).
    pub fn from_parts(primitive: Primitive, cloud: Cloud) -> Result<Self, SynthError> {
        let mut m = make_primitive_model(&primitive, 1, SamplerSeed::default())?;
        m.cloud = cloud;
        Ok(m)
    }
}
