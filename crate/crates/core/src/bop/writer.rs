use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::dataset::{model_file_name, SceneCameraEntry};
use super::{write_depth_png, write_mask_png, write_ply, BopError, CameraInfo, GtEntry, GtInfo, ModelInfo, DEPTH_SCALE_MM};
use crate::geometry::BinaryMask;
use crate::synth::{generate_scene, SceneConfig};

pub fn scene_dir_name(scene: usize) -> String {
    format!("{scene:06}")
}

/// Writes `bytes` to a temporary sibling and renames it over `path`,
/// creating parent directories as needed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), BopError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| BopError::io(parent, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| BopError::format(path, "not a file path"))?
        .to_string_lossy();
    let tmp = parent.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| BopError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| BopError::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BopError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| BopError::format(path, e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn bbox(mask: &BinaryMask) -> [i64; 4] {
    match mask.bbox() {
        Some((u0, v0, u1, v1)) => [u0 as i64, v0 as i64, (u1 - u0 + 1) as i64, (v1 - v0 + 1) as i64],
        None => [-1; 4],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkSummary {
    pub n_scenes: usize,
    pub n_images: usize,
    pub n_instances: usize,
    /// Visibility fraction of every target instance, in scene/image/instance order.
    pub visib_fracts: Vec<f64>,
}

/// Generates `n_scenes` scenes of `config` under `out_dir` in the BOP
/// layout. Scenes render and write in parallel; every file depends only on
/// the config, so reruns are byte-identical.
pub fn generate_benchmark(config: &SceneConfig, n_scenes: usize, out_dir: &Path) -> Result<BenchmarkSummary, BopError> {
    let (targets, occluders) = config.build_models()?;
    let k = &config.intrinsics;
    write_json(
        &out_dir.join("camera.json"),
        &CameraInfo {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
            depth_scale: DEPTH_SCALE_MM,
        },
    )?;
    let models_dir = out_dir.join("models");
    let mut infos = BTreeMap::new();
    for (i, m) in targets.iter().enumerate() {
        write_ply(&models_dir.join(model_file_name(i + 1)), &m.cloud)?;
        infos.insert(i + 1, ModelInfo::from_model(m));
    }
    write_json(&models_dir.join("models_info.json"), &infos)?;

    let per_scene = (0..n_scenes)
        .into_par_iter()
        .map(|s| -> Result<(usize, Vec<f64>), BopError> {
            let images = generate_scene(config, &targets, &occluders, s)?;
            let dir = out_dir.join(scene_dir_name(s));
            let mut cams = BTreeMap::new();
            let mut gts = BTreeMap::new();
            let mut infos = BTreeMap::new();
            let mut fracts = Vec::new();
            for img in &images {
                let im = img.im_id;
                write_depth_png(&dir.join("depth").join(format!("{im:06}.png")), &img.depth)?;
                let mut g = Vec::new();
                let mut info = Vec::new();
                for (n, inst) in img.instances.iter().enumerate() {
                    let name = format!("{im:06}_{n:06}.png");
                    write_mask_png(&dir.join("mask").join(&name), &inst.amodal_mask)?;
                    write_mask_png(&dir.join("mask_visib").join(&name), &inst.visib_mask)?;
                    g.push(GtEntry::from_pose(inst.obj_id, &inst.gt_pose));
                    info.push(GtInfo {
                        visib_fract: inst.visib_fract,
                        px_count_all: inst.amodal_mask.count(),
                        px_count_visib: inst.visib_mask.count(),
                        bbox_obj: bbox(&inst.amodal_mask),
                        bbox_visib: bbox(&inst.visib_mask),
                    });
                    fracts.push(inst.visib_fract);
                }
                cams.insert(
                    im,
                    SceneCameraEntry {
                        cam_k: [k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0],
                        depth_scale: DEPTH_SCALE_MM,
                    },
                );
                gts.insert(im, g);
                infos.insert(im, info);
            }
            write_json(&dir.join("scene_camera.json"), &cams)?;
            write_json(&dir.join("scene_gt.json"), &gts)?;
            write_json(&dir.join("scene_gt_info.json"), &infos)?;
            Ok((images.len(), fracts))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let visib_fracts: Vec<f64> = per_scene.iter().flat_map(|(_, f)| f.iter().copied()).collect();
    Ok(BenchmarkSummary {
        n_scenes,
        n_images: per_scene.iter().map(|(n, _)| n).sum(),
        n_instances: visib_fracts.len(),
        visib_fracts,
    })
}
