use std::path::Path;
use std::time::Instant;

use occlupose::bop::Dataset;
use occlupose::geometry::backproject;
use occlupose::metrics::{write_results, PoseResultRow};
use occlupose::pipeline::{estimate_pose, PipelineConfig, PipelineError};
use rayon::prelude::*;
use serde::Serialize;

use super::Globals;
use crate::error::{CliError, CliResult};
use crate::manifest::{sibling_manifest_path, RunManifest};
use crate::provider::ProviderSpec;

pub struct EstimateArgs<'a> {
    pub dataset: &'a Path,
    pub provider: &'a str,
    pub out: &'a Path,
    pub k: Option<usize>,
    pub refine: Option<usize>,
    /// Write measured per-instance seconds instead of `-1`.
    pub record_time: bool,
}

/// An instance the estimator could not produce a pose for.
#[derive(Debug, Clone, Serialize)]
struct Skipped {
    scene_id: usize,
    im_id: usize,
    obj_id: usize,
    reason: String,
}

enum Outcome {
    Row(PoseResultRow),
    Skip(Skipped),
}

pub fn cmd_estimate(g: &Globals, args: &EstimateArgs) -> CliResult<()> {
    let mut config = g.config.clone();
    if let Some(k) = args.k {
        config.pipeline.k = k;
    }
    if let Some(n) = args.refine {
        config.pipeline.n_refine = n;
    }
    config.validate_pipeline()?;
    let spec = ProviderSpec::parse(args.provider)?;
    let mut manifest = RunManifest::new("estimate", g.seed, g.threads, &config);
    manifest.input("dataset", args.dataset);
    manifest.detail("provider", args.provider);
    let mut degenerate = Vec::new();
    if config.pipeline.k == 1 {
        degenerate.push("k = 1: a single hypothesis");
    }
    if config.pipeline.n_refine == 0 {
        degenerate.push("n_refine = 0: coarse poses only");
    }
    manifest.detail("degenerate", &degenerate);

    let dataset = manifest.timed("load", || Dataset::open(args.dataset))?;
    let k = dataset.intrinsics();
    let jobs: Vec<_> = dataset.instances().map(|(s, im, n, gt, _)| (s, im, n, gt.clone())).collect();
    let base = config.pipeline.seed;
    let provider_seed = g.seed.unwrap_or(base.seed);

    let outcomes = manifest.timed("estimate", || {
        jobs.par_iter()
            .map(|(s, im, n, gt)| -> CliResult<Outcome> {
                let skip = |reason: String| {
                    Ok(Outcome::Skip(Skipped {
                        scene_id: *s,
                        im_id: *im,
                        obj_id: gt.obj_id,
                        reason,
                    }))
                };
                let model = dataset
                    .models
                    .get(&gt.obj_id)
                    .ok_or_else(|| CliError::msg(crate::error::ExitKind::Validation, format!("no model for obj_id {}", gt.obj_id)))?;
                let depth = dataset.depth(*s, *im)?;
                let mask = dataset.mask_visib(*s, *im, *n)?;
                let start = Instant::now();
                let obs = match backproject(&depth, &mask, &k) {
                    Ok(obs) if !obs.is_empty() => obs,
                    _ => return skip("no valid observed pixels".into()),
                };
                let provider = spec.build(&gt.pose(), provider_seed);
                let pipeline = PipelineConfig {
                    seed: base.split(*s as u64).split(*im as u64).split(*n as u64),
                    ..config.pipeline.clone()
                };
                match estimate_pose(&obs, &model.cloud, provider.as_ref(), &pipeline) {
                    Ok(est) => {
                        let time = if args.record_time { start.elapsed().as_secs_f64() } else { -1.0 };
                        Ok(Outcome::Row(PoseResultRow::from_pose(*s, *im, gt.obj_id, est.confidence, &est.pose, time)))
                    }
                    Err(e @ (PipelineError::Empty(_) | PipelineError::HypothesesExhausted { .. })) => skip(e.to_string()),
                    Err(e) => Err(CliError::from(e).context(format!("scene {s} image {im} instance {n}"))),
                }
            })
            .collect::<CliResult<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Row(r) => rows.push(r),
            Outcome::Skip(s) => skipped.push(s),
        }
    }
    write_results(&rows, args.out)?;
    manifest.output("results", args.out);
    manifest.detail("n_rows", rows.len());
    manifest.detail("skipped", &skipped);
    manifest.write(&sibling_manifest_path(args.out))
}
