use std::path::Path;

use occlupose::bop::generate_benchmark;

use super::Globals;
use crate::error::CliResult;
use crate::manifest::RunManifest;

pub fn cmd_synth(g: &Globals, out_dir: &Path, n_scenes: Option<usize>) -> CliResult<()> {
    let mut config = g.config.clone();
    if let Some(n) = n_scenes {
        config.benchmark.n_scenes = n;
    }
    config.validate_synth()?;
    let mut manifest = RunManifest::new("synth", g.seed, g.threads, &config);
    let summary = manifest.timed("generate", || generate_benchmark(&config.synth, config.benchmark.n_scenes, out_dir))?;
    manifest.output("dataset", out_dir);
    manifest.detail("n_scenes", summary.n_scenes);
    manifest.detail("n_images", summary.n_images);
    manifest.detail("n_instances", summary.n_instances);
    manifest.write(&out_dir.join("manifest.json"))
}
