use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{visibility_decile, DecileReport, MetricsError, N_DECILES};
use crate::geometry::BinaryMask;

/// Detected or annotated image region.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// `[x, y, w, h]` in pixels.
    Box([f64; 4]),
    Mask(BinaryMask),
}

impl Region {
    fn iou(&self, other: &Region) -> Result<f64, MetricsError> {
        match (self, other) {
            (Region::Box(a), Region::Box(b)) => {
                let w = (a[0] + a[2]).min(b[0] + b[2]) - a[0].max(b[0]);
                let h = (a[1] + a[3]).min(b[1] + b[3]) - a[1].max(b[1]);
                let inter = w.max(0.0) * h.max(0.0);
                let union = a[2] * a[3] + b[2] * b[3] - inter;
                Ok(if union > 0.0 { inter / union } else { 0.0 })
            }
            (Region::Mask(a), Region::Mask(b)) => {
                if !a.same_size(b.width(), b.height()) {
                    return Err(MetricsError::InvalidInput("mask sizes differ".into()));
                }
                let (mut inter, mut union) = (0usize, 0usize);
                for (x, y) in a.values().iter().zip(b.values()) {
                    inter += (*x && *y) as usize;
                    union += (*x || *y) as usize;
                }
                Ok(if union > 0 { inter as f64 / union as f64 } else { 0.0 })
            }
            _ => Err(MetricsError::MixedRegions),
        }
    }

    fn is_box(&self) -> bool {
        matches!(self, Region::Box(_))
    }

    /// Total order on region contents, used only to break score ties.
    fn content_cmp(&self, other: &Region) -> Ordering {
        match (self, other) {
            (Region::Box(a), Region::Box(b)) => a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal),
            (Region::Mask(a), Region::Mask(b)) => a.values().cmp(b.values()),
            (Region::Box(_), Region::Mask(_)) => Ordering::Less,
            (Region::Mask(_), Region::Box(_)) => Ordering::Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// `(scene_id, im_id)`.
    pub image: (usize, usize),
    pub obj_id: usize,
    pub region: Region,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionGt {
    pub image: (usize, usize),
    pub obj_id: usize,
    pub region: Region,
    pub visib_fract: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionParams {
    /// Ground truth less visible than this is ignored everywhere.
    pub visib_gt_min: f64,
    /// Highest-scored detections kept per image and object.
    pub max_dets: usize,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            visib_gt_min: 0.1,
            max_dets: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub ap: f64,
    pub ar: f64,
    pub ap_deciles: DecileReport,
    pub ar_deciles: DecileReport,
    /// Mean AP over defined deciles.
    pub mapd: f64,
    /// Mean AR over defined deciles.
    pub mard: f64,
}

const N_IOU: usize = 10;
const N_RECALL: usize = 101;

fn iou_thresholds() -> [f64; N_IOU] {
    std::array::from_fn(|i| 0.5 + 0.05 * i as f64)
}

struct ImageEval {
    /// Detection scores in matching order.
    scores: Vec<f64>,
    /// Per IoU threshold: whether each detection matched (`Some(ignored)`).
    matched: Vec<Vec<Option<bool>>>,
    n_counted_gt: usize,
}

/// COCO per-image matching: detections in score order take the best
/// unmatched ground truth with IoU at least the threshold, preferring
/// counted over ignored ground truth.
fn evaluate_image(dets: &[&Detection], gts: &[(&DetectionGt, bool)], max_dets: usize) -> Result<ImageEval, MetricsError> {
    // Counted ground truth first, like COCO's ignore-last ordering.
    let mut order: Vec<usize> = (0..gts.len()).collect();
    order.sort_by_key(|g| gts[*g].1);
    let gts: Vec<(&DetectionGt, bool)> = order.iter().map(|g| gts[*g]).collect();
    let dets = &dets[..dets.len().min(max_dets)];
    let ious = dets
        .iter()
        .map(|d| gts.iter().map(|(g, _)| d.region.iou(&g.region)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut matched = Vec::with_capacity(N_IOU);
    for t in iou_thresholds() {
        let mut gt_taken = vec![false; gts.len()];
        let mut out = vec![None; dets.len()];
        for (d, row) in ious.iter().enumerate() {
            let mut best_iou = t.min(1.0 - 1e-10);
            let mut m: Option<usize> = None;
            for (g, (_, ignored)) in gts.iter().enumerate() {
                if gt_taken[g] {
                    continue;
                }
                if let Some(prev) = m {
                    if !gts[prev].1 && *ignored {
                        break;
                    }
                }
                if row[g] < best_iou {
                    continue;
                }
                best_iou = row[g];
                m = Some(g);
            }
            if let Some(g) = m {
                gt_taken[g] = true;
                out[d] = Some(gts[g].1);
            }
        }
        matched.push(out);
    }
    Ok(ImageEval {
        scores: dets.iter().map(|d| d.score).collect(),
        matched,
        n_counted_gt: gts.iter().filter(|(_, ig)| !ig).count(),
    })
}

/// COCO accumulation for one object: `(AP, AR)` averaged over IoU
/// thresholds, or `None` without counted ground truth.
fn accumulate(evals: &[ImageEval]) -> Option<(f64, f64)> {
    let n_gt: usize = evals.iter().map(|e| e.n_counted_gt).sum();
    if n_gt == 0 {
        return None;
    }
    // Stable merge by descending score across images.
    let mut entries: Vec<(usize, usize)> = evals
        .iter()
        .enumerate()
        .flat_map(|(i, e)| (0..e.scores.len()).map(move |d| (i, d)))
        .collect();
    entries.sort_by(|a, b| evals[b.0].scores[b.1].total_cmp(&evals[a.0].scores[a.1]));
    let rec_thrs: [f64; N_RECALL] = std::array::from_fn(|i| i as f64 / 100.0);
    let (mut ap, mut ar) = (0.0, 0.0);
    for t in 0..N_IOU {
        let (mut tp, mut fp) = (0.0f64, 0.0f64);
        let mut rc = Vec::new();
        let mut pr = Vec::new();
        for &(i, d) in &entries {
            match evals[i].matched[t][d] {
                Some(true) => continue,
                Some(false) => tp += 1.0,
                None => fp += 1.0,
            }
            rc.push(tp / n_gt as f64);
            pr.push(tp / (tp + fp));
        }
        ar += rc.last().copied().unwrap_or(0.0);
        for k in (1..pr.len()).rev() {
            if pr[k] > pr[k - 1] {
                pr[k - 1] = pr[k];
            }
        }
        let mut q = 0.0;
        for r in rec_thrs {
            let idx = rc.partition_point(|x| *x < r);
            if idx < pr.len() {
                q += pr[idx];
            }
        }
        ap += q / N_RECALL as f64;
    }
    Some((ap / N_IOU as f64, ar / N_IOU as f64))
}

fn det_order(a: &Detection, b: &Detection) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.region.content_cmp(&b.region))
}

/// COCO AP/AR over objects, with ground truth flagged ignored by `ignore`.
fn coco(
    dets: &BTreeMap<((usize, usize), usize), Vec<&Detection>>,
    gts: &BTreeMap<((usize, usize), usize), Vec<&DetectionGt>>,
    ignore: &dyn Fn(&DetectionGt) -> bool,
    max_dets: usize,
) -> Result<Option<(f64, f64)>, MetricsError> {
    let mut per_obj: BTreeMap<usize, Vec<ImageEval>> = BTreeMap::new();
    let keys: std::collections::BTreeSet<_> = dets.keys().chain(gts.keys()).copied().collect();
    for key in keys {
        let d = dets.get(&key).map(Vec::as_slice).unwrap_or(&[]);
        let g: Vec<(&DetectionGt, bool)> = gts.get(&key).map_or(Vec::new(), |v| v.iter().map(|g| (*g, ignore(g))).collect());
        per_obj.entry(key.1).or_default().push(evaluate_image(d, &g, max_dets)?);
    }
    let scores: Vec<(f64, f64)> = per_obj.values().filter_map(|e| accumulate(e)).collect();
    if scores.is_empty() {
        return Ok(None);
    }
    let n = scores.len() as f64;
    Ok(Some((scores.iter().map(|s| s.0).sum::<f64>() / n, scores.iter().map(|s| s.1).sum::<f64>() / n)))
}

/// COCO-style detection AP and AR (IoU 0.50:0.95, 101-point interpolated
/// precision) overall and within each visibility decile.
///
/// Within a decile, ground truth of other deciles is ignored: a detection
/// matched to it counts neither way, while unmatched detections remain
/// false positives. Empty deciles report `-1`.
pub fn decile_detection_metrics(detections: &[Detection], gt: &[DetectionGt], params: &DetectionParams) -> Result<DetectionReport, MetricsError> {
    let kinds: Vec<bool> = detections.iter().map(|d| d.region.is_box()).chain(gt.iter().map(|g| g.region.is_box())).collect();
    if kinds.windows(2).any(|w| w[0] != w[1]) {
        return Err(MetricsError::MixedRegions);
    }
    if let Some(d) = detections.iter().find(|d| !d.score.is_finite()) {
        return Err(MetricsError::InvalidInput(format!("non-finite detection score {}", d.score)));
    }
    let mut deciles = Vec::with_capacity(gt.len());
    for g in gt {
        deciles.push(visibility_decile(g.visib_fract)?);
    }
    let mut dets: BTreeMap<_, Vec<&Detection>> = BTreeMap::new();
    for d in detections {
        dets.entry((d.image, d.obj_id)).or_default().push(d);
    }
    for v in dets.values_mut() {
        v.sort_by(|a, b| det_order(a, b));
    }
    let mut gts: BTreeMap<_, Vec<&DetectionGt>> = BTreeMap::new();
    for g in gt {
        gts.entry((g.image, g.obj_id)).or_default().push(g);
    }
    let low = |g: &DetectionGt| g.visib_fract < params.visib_gt_min;
    let (ap, ar) = coco(&dets, &gts, &low, params.max_dets)?.unwrap_or((-1.0, -1.0));
    let mut ap_d = [-1.0; N_DECILES];
    let mut ar_d = [-1.0; N_DECILES];
    for d in 1..=N_DECILES {
        let outside = |g: &DetectionGt| low(g) || visibility_decile(g.visib_fract).map_or(true, |x| x != d);
        if let Some((p, r)) = coco(&dets, &gts, &outside, params.max_dets)? {
            ap_d[d - 1] = p;
            ar_d[d - 1] = r;
        }
    }
    let ap_deciles = DecileReport::new(ap_d);
    let ar_deciles = DecileReport::new(ar_d);
    Ok(DetectionReport {
        ap,
        ar,
        mapd: ap_deciles.mean_defined,
        mard: ar_deciles.mean_defined,
        ap_deciles,
        ar_deciles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> Region {
        Region::Box([x, y, w, h])
    }

    fn gt(x: f64, vis: f64) -> DetectionGt {
        DetectionGt {
            image: (0, 0),
            obj_id: 1,
            region: bx(x, 0.0, 10.0, 10.0),
            visib_fract: vis,
        }
    }

    fn det(x: f64, score: f64) -> Detection {
        Detection {
            image: (0, 0),
            obj_id: 1,
            region: bx(x, 0.0, 10.0, 10.0),
            score,
        }
    }

    #[test]
    fn perfect_detections_score_one() {
        let gts: Vec<_> = (0..6).map(|i| gt(20.0 * i as f64, 0.15 + 0.15 * i as f64)).collect();
        let dets: Vec<_> = (0..6).map(|i| det(20.0 * i as f64, 0.5 + 0.01 * i as f64)).collect();
        let r = decile_detection_metrics(&dets, &gts, &DetectionParams::default()).unwrap();
        assert_eq!((r.ap, r.ar), (1.0, 1.0));
        for (a, b) in r.ap_deciles.per_decile.iter().zip(r.ar_deciles.per_decile) {
            assert!(*a == -1.0 || *a == 1.0);
            assert_eq!(*a, b);
        }
        assert_eq!(r.mapd, 1.0);
        assert_eq!(r.ap_deciles.per_decile[0], -1.0);
    }

    /// Exhaustive precision-recall integration for the toy case below, done
    /// by hand: detections in score order are TP (IoU 1 with A), FP
    /// (IoU 1/3 with B, below every threshold), TP (IoU 0.6 with B).
    #[test]
    fn toy_case_matches_hand_integration() {
        let gts = vec![gt(0.0, 1.0), gt(100.0, 1.0)];
        let dets = vec![det(0.0, 0.9), det(105.0, 0.8), det(102.5, 0.7)];
        // IoU of the third detection with B: overlap 7.5 of union 12.5.
        let iou_b = 75.0 / 125.0;
        let mut ap = 0.0;
        let mut ar = 0.0;
        for t in iou_thresholds() {
            // Precision envelope over recall: 1 up to 0.5, then 2/3 up to 1
            // when the third detection matches.
            let found_b = iou_b >= t;
            let q: f64 = (0..N_RECALL)
                .map(|i| i as f64 / 100.0)
                .map(|r| if r <= 0.5 { 1.0 } else if found_b { 2.0 / 3.0 } else { 0.0 })
                .sum();
            ap += q / N_RECALL as f64;
            ar += if found_b { 1.0 } else { 0.5 };
        }
        ap /= N_IOU as f64;
        ar /= N_IOU as f64;
        let r = decile_detection_metrics(&dets, &gts, &DetectionParams::default()).unwrap();
        assert!((r.ap - ap).abs() < 1e-12, "{} {}", r.ap, ap);
        assert!((r.ar - ar).abs() < 1e-12);
        assert_eq!(r.ap_deciles.per_decile[9], r.ap);
    }

    #[test]
    fn out_of_decile_matches_are_ignored() {
        let gts = vec![gt(0.0, 0.95), gt(100.0, 0.35)];
        let dets = vec![det(0.0, 0.9), det(100.0, 0.8)];
        let r = decile_detection_metrics(&dets, &gts, &DetectionParams::default()).unwrap();
        assert_eq!(r.ap_deciles.per_decile[9], 1.0);
        assert_eq!(r.ap_deciles.per_decile[3], 1.0);
        assert_eq!(r.mapd, 1.0);
        // A detection of nothing is a false positive in every decile.
        let mut fp = dets.clone();
        fp.push(det(300.0, 0.95));
        let r = decile_detection_metrics(&fp, &gts, &DetectionParams::default()).unwrap();
        assert!(r.ap_deciles.per_decile[9] < 1.0);
    }

    #[test]
    fn masks_and_boxes_cannot_mix() {
        let m = Detection {
            region: Region::Mask(BinaryMask::full(4, 4)),
            ..det(0.0, 1.0)
        };
        assert!(matches!(
            decile_detection_metrics(&[m], &[gt(0.0, 1.0)], &DetectionParams::default()),
            Err(MetricsError::MixedRegions)
        ));
    }

    #[test]
    fn mask_iou() {
        let a = Region::Mask(BinaryMask::from_fn(4, 4, |u, _| u < 2));
        let b = Region::Mask(BinaryMask::from_fn(4, 4, |u, _| u < 3));
        assert!((a.iou(&b).unwrap() - 8.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn order_independent() {
        let gts = vec![gt(0.0, 0.5), gt(100.0, 0.7), gt(200.0, 0.2)];
        let dets = vec![det(0.0, 0.5), det(104.0, 0.5), det(201.0, 0.3), det(50.0, 0.5)];
        let a = decile_detection_metrics(&dets, &gts, &DetectionParams::default()).unwrap();
        let mut d2 = dets.clone();
        d2.reverse();
        let mut g2 = gts.clone();
        g2.reverse();
        assert_eq!(a, decile_detection_metrics(&d2, &g2, &DetectionParams::default()).unwrap());
    }
}
