use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mspd_error, mssd_error, visibility_decile, vsd_error, DecileReport, MetricThresholds, MetricsError, PoseResultRow, N_DECILES};
use crate::bop::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Vsd,
    Mssd,
    Mspd,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Vsd, MetricKind::Mssd, MetricKind::Mspd];
}

/// Matching outcome of one evaluated ground-truth instance: for each
/// metric, whether some estimate was matched to it at each point of the
/// metric's threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub scene_id: usize,
    pub im_id: usize,
    pub obj_id: usize,
    pub visib_fract: f64,
    /// `τ`-major over `(τ, θ)` pairs.
    pub vsd: Vec<bool>,
    pub mssd: Vec<bool>,
    pub mspd: Vec<bool>,
}

impl InstanceOutcome {
    fn hits(&self, m: MetricKind) -> &[bool] {
        match m {
            MetricKind::Vsd => &self.vsd,
            MetricKind::Mssd => &self.mssd,
            MetricKind::Mspd => &self.mspd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UarReport {
    /// Mean over metrics of the mean over defined deciles.
    pub uar: f64,
    /// Mean over metrics of the recall over all instances.
    pub ar: f64,
    pub per_metric_decile: BTreeMap<MetricKind, DecileReport>,
    pub per_metric_ar: BTreeMap<MetricKind, f64>,
    /// Evaluated instances per decile.
    pub decile_counts: [usize; N_DECILES],
    pub n_instances: usize,
}

/// Orders estimates by descending score; exact ties fall back to the
/// row contents so the order does not depend on the input order.
fn by_score(a: &PoseResultRow, b: &PoseResultRow) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.r.iter().zip(&b.r).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal))
        .then_with(|| a.t.iter().zip(&b.t).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal))
        .then_with(|| a.time.total_cmp(&b.time))
}

/// Greedy matching in estimate order: each estimate takes the unmatched
/// ground truth with the smallest error below `threshold`.
fn greedy_match(errors: &[Vec<f64>], n_gt: usize, threshold: f64) -> Vec<bool> {
    let mut matched = vec![false; n_gt];
    for row in errors {
        let mut best: Option<usize> = None;
        for (g, e) in row.iter().enumerate() {
            if !matched[g] && *e < threshold && best.is_none_or(|b| *e < row[b]) {
                best = Some(g);
            }
        }
        if let Some(g) = best {
            matched[g] = true;
        }
    }
    matched
}

/// Computes per-instance matching outcomes of `results` against the ground
/// truth of `dataset`.
///
/// For every `(scene, image, object)` the `n` best-scored estimates are
/// kept, `n` being the number of ground-truth instances of that object in
/// the image. Instances less visible than `thresholds.visib_gt_min` take
/// part in matching but are not reported. Estimates whose rendering is
/// empty or behind the camera count as wrong under VSD (error 1) and MSPD.
pub fn evaluate_instances(
    results: &[PoseResultRow],
    dataset: &Dataset,
    thresholds: &MetricThresholds,
) -> Result<Vec<InstanceOutcome>, MetricsError> {
    thresholds.validate()?;
    let mut groups: BTreeMap<(usize, usize, usize), Vec<&PoseResultRow>> = BTreeMap::new();
    for r in results {
        groups.entry(r.key()).or_default().push(r);
    }
    let unknown: Vec<_> = groups
        .keys()
        .filter(|(s, im, obj)| {
            !dataset
                .scenes
                .get(s)
                .and_then(|sc| sc.gt.get(im))
                .is_some_and(|g| g.iter().any(|e| e.obj_id == *obj))
        })
        .copied()
        .collect();
    if !unknown.is_empty() {
        return Err(MetricsError::UnknownGt(unknown));
    }
    let images: Vec<(usize, usize)> = dataset
        .scenes
        .iter()
        .flat_map(|(s, sc)| sc.gt.keys().map(move |im| (*s, *im)))
        .collect();
    let k = dataset.intrinsics();
    let mspd_px = thresholds.mspd_pixels(k.width);
    let per_image = images
        .par_iter()
        .map(|&(s, im)| -> Result<Vec<InstanceOutcome>, MetricsError> {
            let scene = &dataset.scenes[&s];
            let gts = &scene.gt[&im];
            let infos = &scene.info[&im];
            let mut depth = None;
            let mut out = Vec::new();
            let mut objs: Vec<usize> = gts.iter().map(|g| g.obj_id).collect();
            objs.sort_unstable();
            objs.dedup();
            for obj in objs {
                let model = dataset
                    .models
                    .get(&obj)
                    .ok_or_else(|| MetricsError::InvalidInput(format!("no model for object {obj}")))?;
                let idx: Vec<usize> = (0..gts.len()).filter(|i| gts[*i].obj_id == obj).collect();
                let gt_poses: Vec<_> = idx.iter().map(|i| gts[*i].pose()).collect();
                let mut ests: Vec<&PoseResultRow> = groups.get(&(s, im, obj)).cloned().unwrap_or_default();
                ests.sort_by(|a, b| by_score(a, b));
                ests.truncate(idx.len());
                let n_gt = idx.len();
                let mut vsd_err: Vec<Vec<Vec<f64>>> = Vec::new();
                let mut mssd_err = Vec::new();
                let mut mspd_err = Vec::new();
                if !ests.is_empty() && depth.is_none() {
                    depth = Some(dataset.depth(s, im)?);
                }
                for e in &ests {
                    let ep = e.pose();
                    let mut vrow = Vec::new();
                    let mut srow = Vec::new();
                    let mut prow = Vec::new();
                    for gp in &gt_poses {
                        let v = match vsd_error(&ep, gp, model, depth.as_ref().expect("loaded"), &k, thresholds.vsd_delta, &thresholds.vsd_taus) {
                            Ok(v) => v,
                            Err(MetricsError::EmptyRender(_) | MetricsError::BehindCamera(_)) => vec![1.0; thresholds.vsd_taus.len()],
                            Err(other) => return Err(other),
                        };
                        vrow.push(v);
                        srow.push(mssd_error(&ep, gp, model) / model.diameter);
                        prow.push(match mspd_error(&ep, gp, model, &k) {
                            Ok(p) => p,
                            Err(MetricsError::BehindCamera(_)) => f64::INFINITY,
                            Err(other) => return Err(other),
                        });
                    }
                    vsd_err.push(vrow);
                    mssd_err.push(srow);
                    mspd_err.push(prow);
                }
                let mut vsd_hits = vec![Vec::new(); n_gt];
                for t in 0..thresholds.vsd_taus.len() {
                    let errs: Vec<Vec<f64>> = vsd_err.iter().map(|row| row.iter().map(|v| v[t]).collect()).collect();
                    for theta in &thresholds.vsd_thetas {
                        for (g, hit) in greedy_match(&errs, n_gt, *theta).into_iter().enumerate() {
                            vsd_hits[g].push(hit);
                        }
                    }
                }
                let grid_hits = |errs: &[Vec<f64>], grid: &[f64]| {
                    let mut hits = vec![Vec::new(); n_gt];
                    for th in grid {
                        for (g, hit) in greedy_match(errs, n_gt, *th).into_iter().enumerate() {
                            hits[g].push(hit);
                        }
                    }
                    hits
                };
                let mssd_hits = grid_hits(&mssd_err, &thresholds.mssd);
                let mspd_hits = grid_hits(&mspd_err, &mspd_px);
                for (g, i) in idx.iter().enumerate() {
                    let vf = infos[*i].visib_fract;
                    if vf < thresholds.visib_gt_min {
                        continue;
                    }
                    out.push(InstanceOutcome {
                        scene_id: s,
                        im_id: im,
                        obj_id: obj,
                        visib_fract: vf,
                        vsd: vsd_hits[g].clone(),
                        mssd: mssd_hits[g].clone(),
                        mspd: mspd_hits[g].clone(),
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_image.into_iter().flatten().collect())
}

/// Mean over the threshold grid of the recall of `instances`.
fn grid_recall(instances: &[&InstanceOutcome], m: MetricKind) -> f64 {
    let n = instances[0].hits(m).len();
    let mut total = 0.0;
    for t in 0..n {
        let hit = instances.iter().filter(|o| o.hits(m)[t]).count();
        total += hit as f64 / instances.len() as f64;
    }
    total / n as f64
}

/// Aggregates outcomes: per metric, the threshold-averaged recall of each
/// visibility decile; the balanced recall is the mean over metrics of the
/// mean over defined deciles, and the plain average recall pools all
/// instances.
pub fn recall_report(outcomes: &[InstanceOutcome]) -> Result<UarReport, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::InvalidInput("no evaluated ground-truth instances".into()));
    }
    for m in MetricKind::ALL {
        let n = outcomes[0].hits(m).len();
        if n == 0 || outcomes.iter().any(|o| o.hits(m).len() != n) {
            return Err(MetricsError::InvalidInput(format!("inconsistent {m:?} threshold grids")));
        }
    }
    let mut deciles: [Vec<&InstanceOutcome>; N_DECILES] = Default::default();
    for o in outcomes {
        deciles[visibility_decile(o.visib_fract)? - 1].push(o);
    }
    let all: Vec<&InstanceOutcome> = outcomes.iter().collect();
    let mut per_metric_decile = BTreeMap::new();
    let mut per_metric_ar = BTreeMap::new();
    for m in MetricKind::ALL {
        let per: [f64; N_DECILES] = std::array::from_fn(|d| if deciles[d].is_empty() { -1.0 } else { grid_recall(&deciles[d], m) });
        per_metric_decile.insert(m, DecileReport::new(per));
        per_metric_ar.insert(m, grid_recall(&all, m));
    }
    let uar = per_metric_decile.values().map(|r| r.mean_defined).sum::<f64>() / 3.0;
    let ar = per_metric_ar.values().sum::<f64>() / 3.0;
    Ok(UarReport {
        uar,
        ar,
        per_metric_decile,
        per_metric_ar,
        decile_counts: std::array::from_fn(|d| deciles[d].len()),
        n_instances: outcomes.len(),
    })
}

/// Balanced and plain average recall of `results` on `dataset`.
pub fn uar(results: &[PoseResultRow], dataset: &Dataset, thresholds: &MetricThresholds) -> Result<UarReport, MetricsError> {
    recall_report(&evaluate_instances(results, dataset, thresholds)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn outcome(visib: f64, hits: [bool; 3]) -> InstanceOutcome {
        InstanceOutcome {
            scene_id: 0,
            im_id: 0,
            obj_id: 1,
            visib_fract: visib,
            vsd: vec![hits[0]; 4],
            mssd: vec![hits[1]; 2],
            mspd: vec![hits[2]; 3],
        }
    }

    #[test]
    fn greedy_match_prefers_smallest_error() {
        let errs = vec![vec![0.3, 0.1], vec![0.2, 0.05]];
        assert_eq!(greedy_match(&errs, 2, 0.25), vec![true, true]);
        assert_eq!(greedy_match(&errs, 2, 0.15), vec![false, true]);
        assert_eq!(greedy_match(&[], 2, 1.0), vec![false, false]);
    }

    #[test]
    fn single_populated_decile_gives_its_recall() {
        let mut v = vec![outcome(0.55, [true; 3]); 3];
        v.push(outcome(0.58, [false; 3]));
        let r = recall_report(&v).unwrap();
        assert_eq!(r.uar, 0.75);
        assert_eq!(r.uar, r.ar);
        assert_eq!(r.decile_counts[5], 4);
        assert_eq!(r.per_metric_decile[&MetricKind::Mssd].per_decile[0], -1.0);
    }

    #[test]
    fn deciles_are_balanced() {
        // Nine easy visible instances all found, one hard occluded miss.
        let mut v = vec![outcome(0.95, [true; 3]); 9];
        v.push(outcome(0.15, [false; 3]));
        let r = recall_report(&v).unwrap();
        assert!((r.ar - 0.9).abs() < 1e-15);
        assert!((r.uar - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partial_threshold_hits_average() {
        let mut o = outcome(0.5, [true; 3]);
        o.vsd = vec![true, false, false, false];
        o.mspd = vec![true, true, false];
        let r = recall_report(&[o]).unwrap();
        let expect = (0.25 + 1.0 + 2.0 / 3.0) / 3.0;
        assert!((r.uar - expect).abs() < 1e-15);
    }

    #[test]
    fn ar_exceeds_uar_when_visible_instances_dominate() {
        // Instance counts and recall both grow with visibility.
        let mut v = Vec::new();
        for d in 1..10usize {
            let vis = d as f64 / 10.0 + 0.05;
            for i in 0..d {
                v.push(outcome(vis, [i * 10 < d * d, i % 2 == 0 || d > 6, i < d / 2 + 1]));
            }
        }
        let r = recall_report(&v).unwrap();
        assert!(r.ar >= r.uar, "{} {}", r.ar, r.uar);
    }

    #[test]
    fn empty_and_inconsistent_inputs_rejected() {
        assert!(recall_report(&[]).is_err());
        let mut b = outcome(0.5, [true; 3]);
        b.vsd.pop();
        assert!(recall_report(&[outcome(0.5, [true; 3]), b]).is_err());
    }

    proptest! {
        #[test]
        fn uar_bounded_by_best_decile(cells in prop::collection::vec((0.0f64..=1.0, any::<[bool; 3]>()), 1..60)) {
            let v: Vec<_> = cells.iter().map(|(vis, h)| outcome(*vis, *h)).collect();
            let r = recall_report(&v).unwrap();
            let best = r.per_metric_decile.values().flat_map(|d| d.per_decile).fold(-1.0, f64::max);
            prop_assert!(r.uar <= best + 1e-12);
            prop_assert!((0.0..=1.0).contains(&r.uar));
        }

        #[test]
        fn report_is_order_independent(cells in prop::collection::vec((0.0f64..=1.0, any::<[bool; 3]>()), 1..40), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let v: Vec<_> = cells.iter().map(|(vis, h)| outcome(*vis, *h)).collect();
            let mut w = v.clone();
            w.shuffle(&mut crate::sampling::SamplerSeed::from_seed(seed).rng());
            prop_assert_eq!(recall_report(&v).unwrap(), recall_report(&w).unwrap());
        }

        #[test]
        fn one_decile_equals_unstratified(cells in prop::collection::vec(any::<[bool; 3]>(), 1..40), vis in 0.0f64..0.1) {
            let v: Vec<_> = cells.iter().map(|h| outcome(0.3 + vis, *h)).collect();
            let r = recall_report(&v).unwrap();
            prop_assert_eq!(r.uar, r.ar);
        }
    }
}
