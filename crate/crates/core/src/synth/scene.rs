use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{make_primitive_model, render_scene, ObjectModel, Primitive, SynthError};
use crate::geometry::{BinaryMask, CameraIntrinsics, DepthImage};
use crate::sampling::SamplerSeed;
use crate::Pose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub primitive: Primitive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccluderSpec {
    pub primitive: Primitive,
}

/// Scene layout parameters. Every image places each target once and each
/// occluder once in front of a randomly chosen target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub targets: Vec<TargetSpec>,
    pub occluders: Vec<OccluderSpec>,
    pub points_per_model: usize,
    /// Target depth range along the optical axis (meters).
    pub distance: [f64; 2],
    /// Maximum `|x/z|` and `|y/z|` of a target centre.
    pub lateral: f64,
    /// Occluder depth as a fraction of its target's depth.
    pub occluder_depth: [f64; 2],
    /// Maximum lateral offset of an occluder from its target's line of
    /// sight, in target diameters.
    pub occluder_offset: f64,
    pub intrinsics: CameraIntrinsics<f64>,
    pub images_per_scene: usize,
    pub seed: SamplerSeed,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            targets: vec![
                TargetSpec {
                    primitive: Primitive::Box { x: 0.1, y: 0.07, z: 0.05 },
                },
                TargetSpec {
                    primitive: Primitive::Cylinder { radius: 0.035, height: 0.12 },
                },
                TargetSpec {
                    primitive: Primitive::Sphere { diameter: 0.08 },
                },
            ],
            occluders: vec![OccluderSpec {
                primitive: Primitive::Plane { width: 0.08, height: 0.12 },
            }],
            points_per_model: 2048,
            distance: [0.6, 1.0],
            lateral: 0.15,
            occluder_depth: [0.6, 0.85],
            occluder_offset: 0.6,
            intrinsics: CameraIntrinsics {
                fx: 572.4114,
                fy: 573.57043,
                cx: 325.2611,
                cy: 242.04899,
                width: 640,
                height: 480,
            },
            images_per_scene: 4,
            seed: SamplerSeed::default(),
        }
    }
}

impl SceneConfig {
    /// Default targets behind two large occluders placed close to their
    /// lines of sight.
    pub fn heavy_occlusion() -> Self {
        let wall = OccluderSpec {
            primitive: Primitive::Plane { width: 0.1, height: 0.14 },
        };
        Self {
            occluders: vec![wall.clone(), wall],
            occluder_offset: 0.35,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.targets.is_empty() {
            return bad("targets: at least one target is required");
        }
        for (i, t) in self.targets.iter().enumerate() {
            t.primitive
                .validate()
                .map_err(|e| SynthError::InvalidConfig(format!("targets[{i}].primitive: {e}")))?;
        }
        for (i, o) in self.occluders.iter().enumerate() {
            o.primitive
                .validate()
                .map_err(|e| SynthError::InvalidConfig(format!("occluders[{i}].primitive: {e}")))?;
        }
        if self.points_per_model == 0 {
            return bad("points_per_model: must be positive");
        }
        let [d0, d1] = self.distance;
        if !(d0.is_finite() && d1.is_finite() && 0.0 < d0 && d0 <= d1) {
            return bad("distance: need 0 < min <= max");
        }
        let [o0, o1] = self.occluder_depth;
        if !(0.0 < o0 && o0 <= o1 && o1 < 1.0) {
            return bad("occluder_depth: need 0 < min <= max < 1");
        }
        if !(self.lateral.is_finite() && self.lateral >= 0.0) {
            return bad("lateral: must be finite and non-negative");
        }
        if !(self.occluder_offset.is_finite() && self.occluder_offset >= 0.0) {
            return bad("occluder_offset: must be finite and non-negative");
        }
        if self.images_per_scene == 0 {
            return bad("images_per_scene: must be positive");
        }
        self.intrinsics
            .validate()
            .map_err(|e| SynthError::InvalidConfig(format!("intrinsics: {e}")))?;
        Ok(())
    }

    /// Target models (object ids `1..=n` in order) and occluder models.
    pub fn build_models(&self) -> Result<(Vec<ObjectModel>, Vec<ObjectModel>), SynthError> {
        self.validate()?;
        let targets = self
            .targets
            .iter()
            .enumerate()
            .map(|(i, t)| make_primitive_model(&t.primitive, self.points_per_model, self.seed.split(0).split(i as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        let occluders = self
            .occluders
            .iter()
            .enumerate()
            .map(|(i, o)| make_primitive_model(&o.primitive, self.points_per_model, self.seed.split(1).split(i as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((targets, occluders))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneInstance {
    /// 1-based index into the config's targets.
    pub obj_id: usize,
    pub gt_pose: Pose,
    pub visib_fract: f64,
    pub amodal_mask: BinaryMask,
    pub visib_mask: BinaryMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneImage {
    pub im_id: usize,
    pub depth: DepthImage,
    pub instances: Vec<SceneInstance>,
    /// Occluder poses in the order of the config's occluders.
    pub occluder_poses: Vec<Pose>,
}

fn random_rotation<R: Rng>(rng: &mut R, translation: Vector3<f64>) -> Pose {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if q.iter().map(|c| c * c).sum::<f64>() > 1e-12 {
            return Pose::from_quaternion(q[0], q[1], q[2], q[3], translation);
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Renders the images of one scene. Models come from
/// [`SceneConfig::build_models`]; scene `s` draws from `seed.split(2).split(s)`.
pub fn generate_scene(
    config: &SceneConfig,
    targets: &[ObjectModel],
    occluders: &[ObjectModel],
    scene: usize,
) -> Result<Vec<SceneImage>, SynthError> {
    config.validate()?;
    if targets.len() != config.targets.len() || occluders.len() != config.occluders.len() {
        return Err(SynthError::InvalidConfig("model lists do not match the config".into()));
    }
    let scene_seed = config.seed.split(2).split(scene as u64);
    (0..config.images_per_scene)
        .map(|im| {
            let mut rng = scene_seed.split(im as u64).rng();
            let poses: Vec<Pose> = targets
                .iter()
                .map(|_| {
                    let z = uniform(&mut rng, config.distance);
                    let lat = [-config.lateral, config.lateral];
                    let (a, b) = (uniform(&mut rng, lat), uniform(&mut rng, lat));
                    random_rotation(&mut rng, Vector3::new(a * z, b * z, z))
                })
                .collect();
            let occluder_poses: Vec<Pose> = occluders
                .iter()
                .map(|_| {
                    let k = rng.random_range(0..targets.len());
                    let t = poses[k].translation;
                    let f = uniform(&mut rng, config.occluder_depth);
                    let reach = config.occluder_offset * targets[k].diameter;
                    let off = Vector3::new(uniform(&mut rng, [-reach, reach]), uniform(&mut rng, [-reach, reach]), 0.0);
                    // Roughly camera-facing: tilt the plane normal by at most ~30°.
                    let axis = Vector3::new(rng.sample::<f64, _>(StandardNormal), rng.sample(StandardNormal), 0.0);
                    let angle = uniform(&mut rng, [0.0, 0.5]);
                    let centre = t * f + off;
                    if axis.norm() > 1e-12 {
                        Pose::from_axis_angle(&axis, angle, centre)
                    } else {
                        Pose::from_translation(centre)
                    }
                })
                .collect();
            let items: Vec<(&ObjectModel, &Pose)> =
                targets.iter().zip(poses.iter()).chain(occluders.iter().zip(occluder_poses.iter())).collect();
            let out = render_scene(&items, &config.intrinsics)?;
            let instances = out
                .instances
                .into_iter()
                .zip(poses)
                .enumerate()
                .map(|(i, (r, gt_pose))| SceneInstance {
                    obj_id: i + 1,
                    gt_pose,
                    visib_fract: r.visib_fract,
                    amodal_mask: r.amodal,
                    visib_mask: r.visib,
                })
                .collect();
            Ok(SceneImage {
                im_id: im,
                depth: out.depth,
                instances,
                occluder_poses,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_targets() {
        let cfg = SceneConfig {
            targets: vec![],
            ..SceneConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(SynthError::InvalidConfig(m)) if m.starts_with("targets")));
    }

    #[test]
    fn scene_is_deterministic_and_consistent() {
        let cfg = SceneConfig {
            images_per_scene: 2,
            ..SceneConfig::default()
        };
        let (t, o) = cfg.build_models().unwrap();
        let a = generate_scene(&cfg, &t, &o, 3).unwrap();
        let b = generate_scene(&cfg, &t, &o, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_scene(&cfg, &t, &o, 4).unwrap());
        for img in &a {
            assert_eq!(img.instances.len(), 3);
            for inst in &img.instances {
                assert!((0.0..=1.0).contains(&inst.visib_fract));
                let amodal = inst.amodal_mask.count();
                if amodal > 0 {
                    let expect = inst.visib_mask.count() as f64 / amodal as f64;
                    assert_eq!(inst.visib_fract, expect);
                }
                assert_eq!(inst.visib_fract == 1.0, inst.visib_mask == inst.amodal_mask);
                inst.gt_pose.validate().unwrap();
            }
        }
    }

    #[test]
    fn heavy_occlusion_histogram() {
        let cfg = SceneConfig {
            images_per_scene: 1,
            ..SceneConfig::heavy_occlusion()
        };
        let (t, o) = cfg.build_models().unwrap();
        let fr: Vec<f64> = (0..100)
            .flat_map(|s| generate_scene(&cfg, &t, &o, s).unwrap())
            .flat_map(|img| img.instances.into_iter().map(|i| i.visib_fract))
            .collect();
        let low = fr.iter().filter(|f| **f < 0.5).count() as f64 / fr.len() as f64;
        assert!(low >= 0.3, "{low}");
    }
}
