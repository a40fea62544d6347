use nalgebra::Vector3;

use super::{ObjectModel, SynthError};
use crate::geometry::{BinaryMask, DepthImage};
use crate::{Intrinsics, Pose};

/// Each projected point covers the `(2r+1)²` pixel block around its
/// nearest pixel centre.
pub const SPLAT_RADIUS: usize = 1;

/// Depth tolerance (meters) within which a centre-pixel point counts as
/// part of the visible front surface of its own instance.
const FRONT_TOLERANCE: f64 = 0.01;

/// Below this `|cos|` between a surfel normal and the pixel ray the surface
/// is too oblique to measure and the pixel gets no depth.
const GRAZING_COS: f64 = 0.1;

/// Per-instance buffers: `cover` holds the splat minimum depth
/// (`f64::INFINITY` where uncovered) and decides coverage and ordering;
/// `depth` holds the measured depth, 0 where no surface point lands.
struct InstanceBuffers {
    cover: Vec<f64>,
    depth: Vec<f64>,
}

/// Renders one model under one pose.
///
/// Coverage comes from the splats. A pixel gets a depth only when some
/// front-surface surfel projects into it; the depth is where the pixel ray
/// meets the tangent plane of the surfel for which that hit lies closest to
/// the surfel itself. Covered pixels without a surfel (the one-pixel rim the
/// splats add around silhouettes) and pixels seeing the surface at a
/// grazing angle stay at depth 0, like missing sensor returns.
fn render_instance(model: &ObjectModel, pose: &Pose, k: &Intrinsics, index: usize) -> Result<InstanceBuffers, SynthError> {
    let (w, h) = (k.width, k.height);
    let mut cover = vec![f64::INFINITY; w * h];
    let r = SPLAT_RADIUS as i64;
    let projected: Vec<(Vector3<f64>, Vector3<f64>, [f64; 2])> = model
        .render_cloud
        .points()
        .iter()
        .zip(&model.render_normals)
        .map(|(p, n)| (pose.apply(p), pose.rotation * n))
        .filter(|(q, _)| q.z > 0.0)
        .map(|(q, n)| {
            let uv = k.project_point(&q);
            (q, n, uv)
        })
        .collect();
    if projected.is_empty() && !model.render_cloud.is_empty() {
        return Err(SynthError::BehindCamera(index));
    }
    for (q, _, [u, v]) in &projected {
        let (uc, vc) = (u.round() as i64, v.round() as i64);
        for dv in -r..=r {
            let y = vc + dv;
            if y < 0 || y >= h as i64 {
                continue;
            }
            for du in -r..=r {
                let x = uc + du;
                if x < 0 || x >= w as i64 {
                    continue;
                }
                let cell = &mut cover[y as usize * w + x as usize];
                if q.z < *cell {
                    *cell = q.z;
                }
            }
        }
    }
    // Per pixel: the surfel whose tangent-plane hit along the pixel ray lies
    // closest to the surfel itself, and that hit's depth.
    let mut best: Vec<(f64, f64)> = vec![(f64::INFINITY, 0.0); w * h];
    for (q, n, [u, v]) in &projected {
        let (uc, vc) = (u.round(), v.round());
        if uc < 0.0 || vc < 0.0 || uc >= w as f64 || vc >= h as f64 {
            continue;
        }
        let px = vc as usize * w + uc as usize;
        if q.z > cover[px] + FRONT_TOLERANCE {
            continue;
        }
        let ray = Vector3::new((uc - k.cx) / k.fx, (vc - k.cy) / k.fy, 1.0);
        let along = n.dot(&ray);
        if along.abs() < GRAZING_COS * ray.norm() {
            continue;
        }
        let z = n.dot(q) / along;
        let offset = (ray * z - q).norm_squared();
        if z > 0.0 && (offset < best[px].0 || (offset == best[px].0 && z < best[px].1)) {
            best[px] = (offset, z);
        }
    }
    let mut depth = vec![0.0; w * h];
    for (px, (offset, z)) in best.into_iter().enumerate() {
        // Accept hits within two pixel footprints of their surfel.
        let reach = 2.0 * z / k.fx.min(k.fy);
        if offset <= reach * reach {
            depth[px] = z;
        }
    }
    Ok(InstanceBuffers { cover, depth })
}

fn to_depth(values: Vec<f64>, k: &Intrinsics) -> DepthImage {
    DepthImage::new(k.width, k.height, values).expect("finite non-negative depths")
}

/// Depth image of a single model rendered alone.
pub fn render_depth(model: &ObjectModel, pose: &Pose, intrinsics: &Intrinsics) -> Result<DepthImage, SynthError> {
    intrinsics.validate()?;
    Ok(to_depth(render_instance(model, pose, intrinsics, 0)?.depth, intrinsics))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedInstance {
    /// Pixels the instance covers when rendered alone.
    pub amodal: BinaryMask,
    /// Pixels where the instance is the nearest surface in the joint buffer.
    pub visib: BinaryMask,
    /// `|visib| / |amodal|`, 0 for an empty amodal mask.
    pub visib_fract: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub depth: DepthImage,
    pub instances: Vec<RenderedInstance>,
}

/// Point-splat rendering of several posed models into one depth image.
///
/// Each pixel belongs to the instance with the nearest splat; on exact
/// depth ties the earlier instance wins. The depth image carries the
/// owning instance's measured depth.
pub fn render_scene(items: &[(&ObjectModel, &Pose)], intrinsics: &Intrinsics) -> Result<RenderOutput, SynthError> {
    intrinsics.validate()?;
    let (w, h) = (intrinsics.width, intrinsics.height);
    let buffers = items
        .iter()
        .enumerate()
        .map(|(i, (m, p))| render_instance(m, p, intrinsics, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut nearest = vec![f64::INFINITY; w * h];
    let mut owner = vec![usize::MAX; w * h];
    for (k, buf) in buffers.iter().enumerate() {
        for (px, z) in buf.cover.iter().enumerate() {
            if *z < nearest[px] {
                nearest[px] = *z;
                owner[px] = k;
            }
        }
    }
    let depth = owner
        .iter()
        .enumerate()
        .map(|(px, o)| if *o == usize::MAX { 0.0 } else { buffers[*o].depth[px] })
        .collect();
    let instances = buffers
        .iter()
        .enumerate()
        .map(|(k, buf)| {
            let amodal = BinaryMask::new(w, h, buf.cover.iter().map(|z| z.is_finite()).collect()).expect("sized");
            let visib = BinaryMask::new(w, h, owner.iter().map(|o| *o == k).collect()).expect("sized");
            let all = amodal.count();
            let visib_fract = if all == 0 { 0.0 } else { visib.count() as f64 / all as f64 };
            RenderedInstance {
                amodal,
                visib,
                visib_fract,
            }
        })
        .collect();
    Ok(RenderOutput {
        depth: to_depth(depth, intrinsics),
        instances,
    })
}
