use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{read_depth_png, read_mask_png, read_ply, BopError};
use crate::geometry::{BinaryMask, DepthImage};
use crate::synth::{ObjectModel, Primitive};
use crate::{Intrinsics, Pose};

/// Contents of the dataset-level `camera.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraInfo {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Millimeters per depth PNG unit.
    pub depth_scale: f64,
}

impl CameraInfo {
    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
        }
    }
}

/// One image entry of `scene_camera.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneCameraEntry {
    /// Row-major 3×3 intrinsic matrix.
    #[serde(rename = "cam_K")]
    pub cam_k: [f64; 9],
    pub depth_scale: f64,
}

/// One instance of `scene_gt.json`; the pose maps model millimeters to
/// camera millimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtEntry {
    pub obj_id: usize,
    #[serde(rename = "cam_R_m2c")]
    pub cam_r_m2c: [f64; 9],
    pub cam_t_m2c: [f64; 3],
}

impl GtEntry {
    pub fn from_pose(obj_id: usize, pose: &Pose) -> Self {
        let r = pose.rotation;
        Self {
            obj_id,
            cam_r_m2c: std::array::from_fn(|k| r[(k / 3, k % 3)]),
            cam_t_m2c: std::array::from_fn(|k| pose.translation[k] * 1000.0),
        }
    }

    /// Pose in meters.
    pub fn pose(&self) -> Pose {
        Pose::from_parts_unchecked(
            Matrix3::from_row_slice(&self.cam_r_m2c),
            Vector3::from_column_slice(&self.cam_t_m2c) / 1000.0,
        )
    }
}

/// One instance of `scene_gt_info.json`. Boxes are `[x, y, w, h]` in
/// pixels, all `-1` for empty masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtInfo {
    pub visib_fract: f64,
    pub px_count_all: usize,
    pub px_count_visib: usize,
    pub bbox_obj: [i64; 4],
    pub bbox_visib: [i64; 4],
}

/// One entry of `models/models_info.json` (lengths in millimeters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub diameter: f64,
    pub min_x: f64,
    pub min_y: f64,
    pub min_z: f64,
    pub size_x: f64,
    pub size_y: f64,
    pub size_z: f64,
    /// Row-major 4×4 transforms with translation in millimeters.
    pub symmetries_discrete: Vec<[f64; 16]>,
    /// Set for shapes with a symmetry not covered by the discrete list.
    #[serde(default)]
    pub continuous: bool,
    pub primitive: Primitive,
}

impl ModelInfo {
    pub fn from_model(model: &ObjectModel) -> Self {
        let pts = model.cloud.points();
        let lo = pts.iter().fold(Vector3::repeat(f64::INFINITY), |a, p| a.inf(p));
        let hi = pts.iter().fold(Vector3::repeat(f64::NEG_INFINITY), |a, p| a.sup(p));
        let symmetries_discrete = model
            .symmetries
            .iter()
            .map(|s| {
                let mut m = [0.0; 16];
                for r in 0..3 {
                    for c in 0..3 {
                        m[r * 4 + c] = s.rotation[(r, c)];
                    }
                    m[r * 4 + 3] = s.translation[r] * 1000.0;
                }
                m[15] = 1.0;
                m
            })
            .collect();
        Self {
            diameter: model.diameter * 1000.0,
            min_x: lo.x * 1000.0,
            min_y: lo.y * 1000.0,
            min_z: lo.z * 1000.0,
            size_x: (hi.x - lo.x) * 1000.0,
            size_y: (hi.y - lo.y) * 1000.0,
            size_z: (hi.z - lo.z) * 1000.0,
            symmetries_discrete,
            continuous: model.continuous,
            primitive: model.primitive,
        }
    }
}

/// Ground truth of one scene directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneData {
    pub camera: BTreeMap<usize, SceneCameraEntry>,
    pub gt: BTreeMap<usize, Vec<GtEntry>>,
    pub info: BTreeMap<usize, Vec<GtInfo>>,
}

/// A dataset on disk. JSON tables load eagerly; depth and masks load on
/// request.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub camera: CameraInfo,
    pub model_info: BTreeMap<usize, ModelInfo>,
    pub models: BTreeMap<usize, ObjectModel>,
    pub scenes: BTreeMap<usize, SceneData>,
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, BopError> {
    let bytes = fs::read(path).map_err(|e| BopError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| BopError::format(path, e.to_string()))
}

pub(crate) fn model_file_name(obj_id: usize) -> String {
    format!("obj_{obj_id:06}.ply")
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self, BopError> {
        let camera: CameraInfo = read_json(&root.join("camera.json"))?;
        let model_info: BTreeMap<usize, ModelInfo> = read_json(&root.join("models").join("models_info.json"))?;
        let mut models = BTreeMap::new();
        for (id, info) in &model_info {
            let cloud = read_ply(&root.join("models").join(model_file_name(*id)))?;
            models.insert(*id, ObjectModel::from_parts(info.primitive, cloud)?);
        }
        let mut scenes = BTreeMap::new();
        let entries = fs::read_dir(root).map_err(|e| BopError::io(root, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| BopError::io(root, e))?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            if name.len() != 6 || !name.bytes().all(|b| b.is_ascii_digit()) || !entry.path().is_dir() {
                continue;
            }
            let dir = entry.path();
            let scene = SceneData {
                camera: read_json(&dir.join("scene_camera.json"))?,
                gt: read_json(&dir.join("scene_gt.json"))?,
                info: read_json(&dir.join("scene_gt_info.json"))?,
            };
            for (im, gts) in &scene.gt {
                let n_info = scene.info.get(im).map_or(0, Vec::len);
                if n_info != gts.len() {
                    return Err(BopError::format(
                        &dir.join("scene_gt_info.json"),
                        format!("image {im}: {} gt entries but {n_info} info entries", gts.len()),
                    ));
                }
            }
            scenes.insert(name.parse().expect("six digits"), scene);
        }
        Ok(Self {
            root: root.to_path_buf(),
            camera,
            model_info,
            models,
            scenes,
        })
    }

    pub fn intrinsics(&self) -> Intrinsics {
        self.camera.intrinsics()
    }

    pub fn scene_dir(&self, scene: usize) -> PathBuf {
        self.root.join(super::scene_dir_name(scene))
    }

    pub fn depth_path(&self, scene: usize, im: usize) -> PathBuf {
        self.scene_dir(scene).join("depth").join(format!("{im:06}.png"))
    }

    pub fn mask_path(&self, scene: usize, im: usize, inst: usize) -> PathBuf {
        self.scene_dir(scene).join("mask").join(format!("{im:06}_{inst:06}.png"))
    }

    pub fn mask_visib_path(&self, scene: usize, im: usize, inst: usize) -> PathBuf {
        self.scene_dir(scene).join("mask_visib").join(format!("{im:06}_{inst:06}.png"))
    }

    pub fn depth(&self, scene: usize, im: usize) -> Result<DepthImage, BopError> {
        read_depth_png(&self.depth_path(scene, im))
    }

    /// Amodal mask of instance `inst` (its index in `scene_gt.json`).
    pub fn mask(&self, scene: usize, im: usize, inst: usize) -> Result<BinaryMask, BopError> {
        read_mask_png(&self.mask_path(scene, im, inst))
    }

    pub fn mask_visib(&self, scene: usize, im: usize, inst: usize) -> Result<BinaryMask, BopError> {
        read_mask_png(&self.mask_visib_path(scene, im, inst))
    }

    /// Every `(scene, image, instance index, entry, info)` in key order.
    pub fn instances(&self) -> impl Iterator<Item = (usize, usize, usize, &GtEntry, &GtInfo)> {
        self.scenes.iter().flat_map(|(s, data)| {
            data.gt.iter().flat_map(move |(im, gts)| {
                gts.iter()
                    .zip(&data.info[im])
                    .enumerate()
                    .map(move |(k, (g, i))| (*s, *im, k, g, i))
            })
        })
    }
}
