use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use occlupose::bop::{write_atomic, Dataset};
use occlupose::metrics::{
    aggregate_datasets, decile_detection_metrics, parse_results, uar, DecileReport, Detection, DetectionGt, DetectionParams,
    MetricKind, Region, N_DECILES,
};
use serde::{Deserialize, Serialize};

use super::Globals;
use crate::error::{CliError, CliResult, ExitKind};
use crate::manifest::{sibling_manifest_path, RunManifest};

/// JSON report of one method on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    pub n_instances: usize,
    #[serde(rename = "AR")]
    pub ar: f64,
    #[serde(rename = "UAR")]
    pub uar: f64,
    pub per_metric_ar: BTreeMap<MetricKind, f64>,
    pub per_metric_decile: BTreeMap<MetricKind, DecileReport>,
    /// Recall per visibility decile averaged over the three metrics; `-1`
    /// for empty deciles.
    pub per_decile: [f64; N_DECILES],
    pub decile_counts: [usize; N_DECILES],
    #[serde(rename = "mAPD")]
    pub mapd: Option<f64>,
    #[serde(rename = "mARD")]
    pub mard: Option<f64>,
    /// Mean recorded seconds per estimate, absent when no row carries a time.
    pub mean_time: Option<f64>,
}

/// One entry of a `--detections` file; boxes are `[x, y, w, h]` pixels.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRow {
    pub scene_id: usize,
    pub im_id: usize,
    pub obj_id: usize,
    pub bbox: [f64; 4],
    pub score: f64,
}

/// Cross-dataset means of per-dataset reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_datasets: usize,
    #[serde(rename = "AR")]
    pub ar: Option<f64>,
    #[serde(rename = "UAR")]
    pub uar: Option<f64>,
    #[serde(rename = "mAPD")]
    pub mapd: Option<f64>,
    #[serde(rename = "mARD")]
    pub mard: Option<f64>,
}

/// The fields of a per-dataset report that aggregation reads; all optional
/// so hand-written summaries work too.
#[derive(Debug, Clone, Default, Deserialize)]
struct DatasetSummary {
    #[serde(rename = "AR")]
    ar: Option<f64>,
    #[serde(rename = "UAR")]
    uar: Option<f64>,
    #[serde(rename = "mAPD")]
    mapd: Option<f64>,
    #[serde(rename = "mARD")]
    mard: Option<f64>,
}

pub struct EvaluateArgs<'a> {
    pub dataset: Option<&'a Path>,
    pub results: Option<&'a Path>,
    pub detections: Option<&'a Path>,
    pub method: Option<&'a str>,
    pub aggregate: &'a [PathBuf],
    pub out: &'a Path,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(e).context(format!("reading {}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(e).context(format!("parsing {}", path.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn decile_table(report: &EvaluationReport) -> String {
    let mut out = String::from("decile,visib_min,visib_max,n_instances,vsd,mssd,mspd,mean\n");
    for d in 0..N_DECILES {
        let _ = write!(out, "{},{},{},{}", d + 1, d as f64 / 10.0, (d + 1) as f64 / 10.0, report.decile_counts[d]);
        for m in MetricKind::ALL {
            let _ = write!(out, ",{}", report.per_metric_decile[&m].per_decile[d]);
        }
        let _ = writeln!(out, ",{}", report.per_decile[d]);
    }
    out
}

fn detection_table(ap: &DecileReport, ar: &DecileReport) -> String {
    let mut out = String::from("decile,ap,ar\n");
    for d in 0..N_DECILES {
        let _ = writeln!(out, "{},{},{}", d + 1, ap.per_decile[d], ar.per_decile[d]);
    }
    out
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn detection_gt(dataset: &Dataset) -> Vec<DetectionGt> {
    dataset
        .instances()
        .map(|(s, im, _, g, info)| {
            let b = if info.bbox_visib[2] > 0 { info.bbox_visib.map(|v| v as f64) } else { [0.0; 4] };
            DetectionGt {
                image: (s, im),
                obj_id: g.obj_id,
                region: Region::Box(b),
                visib_fract: info.visib_fract,
            }
        })
        .collect()
}

fn per_decile_mean(per_metric: &BTreeMap<MetricKind, DecileReport>) -> [f64; N_DECILES] {
    std::array::from_fn(|d| {
        let vals: Vec<f64> = per_metric.values().map(|r| r.per_decile[d]).filter(|v| *v >= 0.0).collect();
        if vals.is_empty() {
            -1.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    })
}

pub fn cmd_evaluate(g: &Globals, args: &EvaluateArgs) -> CliResult<()> {
    if !args.aggregate.is_empty() {
        if args.dataset.is_some() || args.results.is_some() || args.detections.is_some() {
            return Err(CliError::msg(ExitKind::Validation, "--aggregate cannot be combined with --dataset, --results or --detections"));
        }
        return aggregate(g, args.aggregate, args.out);
    }
    let (Some(dataset_dir), Some(results_path)) = (args.dataset, args.results) else {
        return Err(CliError::msg(ExitKind::Validation, "evaluate needs --dataset and --results, or --aggregate"));
    };
    g.config.validate_metrics()?;
    let mut manifest = RunManifest::new("evaluate", g.seed, g.threads, &g.config);
    manifest.input("dataset", dataset_dir);
    manifest.input("results", results_path);
    let dataset = manifest.timed("load", || Dataset::open(dataset_dir))?;
    let rows = parse_results(results_path)?;
    let recall = manifest.timed("pose_metrics", || uar(&rows, &dataset, &g.config.metrics))?;

    let (mut mapd, mut mard, mut det_table) = (None, None, None);
    if let Some(path) = args.detections {
        manifest.input("detections", path);
        let dets: Vec<DetectionRow> = read_json(path)?;
        let dets: Vec<Detection> = dets
            .into_iter()
            .map(|d| Detection {
                image: (d.scene_id, d.im_id),
                obj_id: d.obj_id,
                region: Region::Box(d.bbox),
                score: d.score,
            })
            .collect();
        let params = DetectionParams {
            visib_gt_min: g.config.metrics.visib_gt_min,
            ..DetectionParams::default()
        };
        let det = manifest.timed("detection_metrics", || decile_detection_metrics(&dets, &detection_gt(&dataset), &params))?;
        mapd = Some(det.mapd);
        mard = Some(det.mard);
        det_table = Some(detection_table(&det.ap_deciles, &det.ar_deciles));
    }

    let times: Vec<f64> = rows.iter().map(|r| r.time).filter(|t| *t >= 0.0).collect();
    let method = args
        .method
        .map(str::to_string)
        .unwrap_or_else(|| results_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let report = EvaluationReport {
        method,
        n_instances: recall.n_instances,
        ar: recall.ar,
        uar: recall.uar,
        per_decile: per_decile_mean(&recall.per_metric_decile),
        per_metric_ar: recall.per_metric_ar,
        per_metric_decile: recall.per_metric_decile,
        decile_counts: recall.decile_counts,
        mapd,
        mard,
        mean_time: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
    };
    write_json(args.out, &report)?;
    manifest.output("report", args.out);
    let table = with_suffix(args.out, "_deciles.csv");
    write_atomic(&table, decile_table(&report).as_bytes())?;
    manifest.output("decile_table", &table);
    if let Some(t) = det_table {
        let p = with_suffix(args.out, "_detection_deciles.csv");
        write_atomic(&p, t.as_bytes())?;
        manifest.output("detection_decile_table", &p);
    }
    manifest.write(&sibling_manifest_path(args.out))
}

fn aggregate(g: &Globals, inputs: &[PathBuf], out: &Path) -> CliResult<()> {
    let mut manifest = RunManifest::new("evaluate --aggregate", g.seed, g.threads, &g.config);
    let summaries = inputs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            manifest.input(&format!("report_{i}"), p);
            read_json::<DatasetSummary>(p)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mean = |name: &str, pick: fn(&DatasetSummary) -> Option<f64>| -> CliResult<Option<f64>> {
        let vals: Vec<Option<f64>> = summaries.iter().map(pick).collect();
        if vals.iter().all(Option::is_none) {
            return Ok(None);
        }
        let present: Option<Vec<f64>> = vals.iter().copied().collect();
        let present = present.ok_or_else(|| CliError::msg(ExitKind::Validation, format!("{name} is missing from some reports")))?;
        Ok(Some(aggregate_datasets(&present)?))
    };
    let report = AggregateReport {
        n_datasets: summaries.len(),
        ar: mean("AR", |s| s.ar)?,
        uar: mean("UAR", |s| s.uar)?,
        mapd: mean("mAPD", |s| s.mapd)?,
        mard: mean("mARD", |s| s.mard)?,
    };
    write_json(out, &report)?;
    manifest.output("report", out);
    manifest.write(&sibling_manifest_path(out))
}
