use std::fs;
use std::path::Path;

use occlupose::bop::{generate_benchmark, Dataset};
use occlupose::synth::{generate_scene, SceneConfig};

fn small_config() -> SceneConfig {
    SceneConfig {
        images_per_scene: 2,
        points_per_model: 512,
        ..SceneConfig::default()
    }
}

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn empty_benchmark_is_a_valid_skeleton() {
    let dir = tempfile::tempdir().unwrap();
    let summary = generate_benchmark(&small_config(), 0, dir.path()).unwrap();
    assert_eq!(summary.n_images, 0);
    let ds = Dataset::open(dir.path()).unwrap();
    assert!(ds.scenes.is_empty());
    assert_eq!(ds.models.len(), 3);
    assert_eq!(ds.intrinsics(), small_config().intrinsics);
}

#[test]
fn round_trip_matches_generator() {
    let cfg = small_config();
    let dir = tempfile::tempdir().unwrap();
    let summary = generate_benchmark(&cfg, 2, dir.path()).unwrap();
    assert_eq!((summary.n_scenes, summary.n_images, summary.n_instances), (2, 4, 12));
    let ds = Dataset::open(dir.path()).unwrap();
    let (targets, occluders) = cfg.build_models().unwrap();
    for (id, m) in &ds.models {
        let orig = &targets[id - 1];
        assert_eq!(m.primitive, orig.primitive);
        assert_eq!(m.symmetries.len(), orig.symmetries.len());
        for (a, b) in m.cloud.points().iter().zip(orig.cloud.points()) {
            assert!((a - b).norm() < 1e-9);
        }
        assert!((ds.model_info[id].diameter - orig.diameter * 1000.0).abs() < 1e-9);
    }
    for s in 0..2 {
        let images = generate_scene(&cfg, &targets, &occluders, s).unwrap();
        let scene = &ds.scenes[&s];
        for img in &images {
            let gts = &scene.gt[&img.im_id];
            let infos = &scene.info[&img.im_id];
            assert_eq!(gts.len(), img.instances.len());
            let depth = ds.depth(s, img.im_id).unwrap();
            for (a, b) in depth.values().iter().zip(img.depth.values()) {
                assert!((a - b).abs() <= 0.5e-4 + 1e-12);
            }
            for (k, inst) in img.instances.iter().enumerate() {
                let pose = gts[k].pose();
                assert_eq!(gts[k].obj_id, inst.obj_id);
                assert!((pose.rotation - inst.gt_pose.rotation).abs().max() < 1e-9);
                assert!((pose.translation - inst.gt_pose.translation).abs().max() < 1e-9);
                assert!((infos[k].visib_fract - inst.visib_fract).abs() < 1e-9);
                assert_eq!(infos[k].px_count_visib, inst.visib_mask.count());
                assert_eq!(ds.mask(s, img.im_id, k).unwrap(), inst.amodal_mask);
                assert_eq!(ds.mask_visib(s, img.im_id, k).unwrap(), inst.visib_mask);
            }
        }
    }
    assert_eq!(ds.instances().count(), 12);
}

#[test]
fn regeneration_is_byte_identical() {
    let cfg = small_config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate_benchmark(&cfg, 2, a.path()).unwrap();
    generate_benchmark(&cfg, 2, b.path()).unwrap();
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.iter().any(|(n, _)| n.ends_with("scene_gt.json")));
    assert!(fa.iter().all(|(n, _)| !n.ends_with(".tmp")));
    assert_eq!(fa, fb);
}

#[test]
fn missing_gt_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    generate_benchmark(&small_config(), 1, dir.path()).unwrap();
    fs::remove_file(dir.path().join("000000").join("scene_gt_info.json")).unwrap();
    let err = Dataset::open(dir.path()).unwrap_err().to_string();
    assert!(err.contains("scene_gt_info.json"), "{err}");
}
