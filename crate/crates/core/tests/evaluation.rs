use occlupose::bop::{generate_benchmark, Dataset};
use occlupose::metrics::{
    mspd_error, mssd_error, parse_results, uar, visibility_decile, vsd_error, write_results, MetricKind, MetricThresholds,
    MetricsError, PoseResultRow,
};
use occlupose::synth::SceneConfig;
use occlupose::Pose;
use nalgebra::Vector3;

fn dataset() -> (tempfile::TempDir, Dataset) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SceneConfig {
        images_per_scene: 2,
        points_per_model: 512,
        ..SceneConfig::heavy_occlusion()
    };
    generate_benchmark(&cfg, 3, dir.path()).unwrap();
    let ds = Dataset::open(dir.path()).unwrap();
    (dir, ds)
}

fn gt_rows(ds: &Dataset) -> Vec<PoseResultRow> {
    ds.instances()
        .map(|(s, im, _, g, _)| PoseResultRow::from_pose(s, im, g.obj_id, 1.0, &g.pose(), -1.0))
        .collect()
}

#[test]
fn ground_truth_as_results_is_perfect() {
    let (_dir, ds) = dataset();
    let k = ds.intrinsics();
    for (s, im, _, g, info) in ds.instances() {
        let model = &ds.models[&g.obj_id];
        let pose = g.pose();
        assert_eq!(mssd_error(&pose, &pose, model), 0.0);
        assert_eq!(mspd_error(&pose, &pose, model, &k).unwrap(), 0.0);
        if info.visib_fract > 0.0 {
            let depth = ds.depth(s, im).unwrap();
            let e = vsd_error(&pose, &pose, model, &depth, &k, 0.015, &MetricThresholds::default().vsd_taus).unwrap();
            assert!(e.iter().all(|v| *v == 0.0));
        }
    }
    let r = uar(&gt_rows(&ds), &ds, &MetricThresholds::default()).unwrap();
    assert_eq!(r.uar, 1.0);
    assert_eq!(r.ar, 1.0);
}

#[test]
fn half_wrong_results_match_hand_count() {
    let (dir, ds) = dataset();
    let thresholds = MetricThresholds::default();
    // Every other instance gets an estimate shifted sideways by half a metre.
    let mut rows = Vec::new();
    let mut found = [[0usize; 2]; 10];
    for (n, (s, im, _, g, info)) in ds.instances().enumerate() {
        let good = n % 2 == 0;
        let mut pose = g.pose();
        if !good {
            pose = Pose::from_parts_unchecked(pose.rotation, pose.translation + Vector3::new(0.5, 0.0, 0.0));
        }
        rows.push(PoseResultRow::from_pose(s, im, g.obj_id, 1.0, &pose, -1.0));
        if info.visib_fract >= thresholds.visib_gt_min {
            let d = visibility_decile(info.visib_fract).unwrap() - 1;
            found[d][0] += good as usize;
            found[d][1] += 1;
        }
    }
    let defined: Vec<f64> = found.iter().filter(|c| c[1] > 0).map(|c| c[0] as f64 / c[1] as f64).collect();
    let expect = defined.iter().sum::<f64>() / defined.len() as f64;
    let total: usize = found.iter().map(|c| c[1]).sum();
    let expect_ar = found.iter().map(|c| c[0]).sum::<usize>() as f64 / total as f64;

    let path = dir.path().join("results.csv");
    write_results(&rows, &path).unwrap();
    let parsed = parse_results(&path).unwrap();
    let r = uar(&parsed, &ds, &thresholds).unwrap();
    assert!((r.uar - expect).abs() < 1e-9, "{} vs {}", r.uar, expect);
    assert!((r.ar - expect_ar).abs() < 1e-9);
    assert_eq!(r.n_instances, total);
    for m in MetricKind::ALL {
        assert_eq!(r.per_metric_decile[&m].per_decile[0], -1.0);
    }
}

#[test]
fn symmetric_estimates_score_full_recall_on_symmetry_aware_metrics() {
    let (_dir, ds) = dataset();
    let rows: Vec<_> = ds
        .instances()
        .map(|(s, im, _, g, _)| {
            let model = &ds.models[&g.obj_id];
            let sym = model.symmetries.last().unwrap();
            PoseResultRow::from_pose(s, im, g.obj_id, 1.0, &g.pose().compose(sym), -1.0)
        })
        .collect();
    for row in &rows {
        let g = ds.scenes[&row.scene_id].gt[&row.im_id].iter().find(|g| g.obj_id == row.obj_id).unwrap();
        let model = &ds.models[&row.obj_id];
        assert!(mssd_error(&row.pose(), &g.pose(), model) < 1e-6);
    }
    let r = uar(&rows, &ds, &MetricThresholds::default()).unwrap();
    assert_eq!(r.per_metric_ar[&MetricKind::Mssd], 1.0);
    assert_eq!(r.per_metric_ar[&MetricKind::Mspd], 1.0);
}

#[test]
fn unknown_keys_are_listed() {
    let (_dir, ds) = dataset();
    let mut rows = gt_rows(&ds);
    rows.push(PoseResultRow::from_pose(99, 0, 1, 1.0, &Pose::identity(), -1.0));
    match uar(&rows, &ds, &MetricThresholds::default()) {
        Err(MetricsError::UnknownGt(keys)) => assert_eq!(keys, vec![(99, 0, 1)]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn evaluation_ignores_row_order() {
    let (_dir, ds) = dataset();
    let mut rows = gt_rows(&ds);
    for (i, r) in rows.iter_mut().enumerate() {
        r.score = (i % 3) as f64;
        if i % 4 == 1 {
            r.t[0] += 40.0;
        }
    }
    let a = uar(&rows, &ds, &MetricThresholds::default()).unwrap();
    rows.reverse();
    let b = uar(&rows, &ds, &MetricThresholds::default()).unwrap();
    assert_eq!(a, b);
}
