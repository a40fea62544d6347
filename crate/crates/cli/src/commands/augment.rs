use std::path::{Path, PathBuf};

use occlupose::augment::{augment_depth, augment_mask};
use occlupose::bop::{read_depth_png, read_mask_png, write_atomic, write_depth_png, write_mask_png, BopError};
use occlupose::sampling::SamplerSeed;
use rayon::prelude::*;

use super::Globals;
use crate::error::{CliError, CliResult, ExitKind};
use crate::manifest::RunManifest;

fn list_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> CliResult<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| BopError::Io { path: dir.to_path_buf(), source: e })?;
    for entry in entries {
        let entry = entry.map_err(|e| BopError::Io { path: dir.to_path_buf(), source: e })?;
        let path = entry.path();
        if path.is_dir() {
            list_files(root, &path, out)?;
        } else {
            out.push(path.strip_prefix(root).expect("listed under root").to_path_buf());
        }
    }
    Ok(())
}

/// Which augmentation a dataset file receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FileKind {
    /// `<scene>/depth/<im>.png`.
    Depth { scene: u64, im: u64 },
    /// `<scene>/mask_visib/<im>_<inst>.png`.
    VisibleMask { scene: u64, im: u64, inst: u64 },
    Copy,
}

fn classify(rel: &Path) -> FileKind {
    let parts: Vec<&str> = rel.iter().filter_map(|c| c.to_str()).collect();
    let [scene, dir, file] = parts[..] else {
        return FileKind::Copy;
    };
    let (Ok(scene), Some(stem)) = (scene.parse::<u64>(), file.strip_suffix(".png")) else {
        return FileKind::Copy;
    };
    match (dir, stem.split_once('_')) {
        ("depth", None) => stem.parse().map_or(FileKind::Copy, |im| FileKind::Depth { scene, im }),
        ("mask_visib", Some((im, inst))) => match (im.parse(), inst.parse()) {
            (Ok(im), Ok(inst)) => FileKind::VisibleMask { scene, im, inst },
            _ => FileKind::Copy,
        },
        _ => FileKind::Copy,
    }
}

/// Copies a dataset, corrupting depth images and visible masks with the
/// `[augment]` parameters. Amodal masks and ground-truth tables are copied
/// unchanged. Each file draws from its own seed stream, so the output does
/// not depend on processing order.
pub fn cmd_augment(g: &Globals, dataset: &Path, out_dir: &Path) -> CliResult<()> {
    g.config.validate_augment()?;
    if out_dir.starts_with(dataset) {
        return Err(CliError::msg(ExitKind::Validation, "output directory must not lie inside the input dataset"));
    }
    let mut manifest = RunManifest::new("augment", g.seed, g.threads, &g.config);
    manifest.input("dataset", dataset);
    let mut files = Vec::new();
    list_files(dataset, dataset, &mut files)?;
    // The input's own manifest is replaced by this run's.
    files.retain(|f| f != Path::new("manifest.json"));
    files.sort();
    let base = SamplerSeed::from_seed(g.seed.unwrap_or(0));
    let params = &g.config.augment;
    let counts = manifest.timed("augment", || {
        files
            .par_iter()
            .map(|rel| -> CliResult<(usize, usize, usize)> {
                let src = dataset.join(rel);
                let dst = out_dir.join(rel);
                match classify(rel) {
                    FileKind::Depth { scene, im } => {
                        let depth = read_depth_png(&src)?;
                        let seed = base.split(0).split(scene).split(im);
                        write_depth_png(&dst, &augment_depth(&depth, &params.depth, seed)?)?;
                        Ok((1, 0, 0))
                    }
                    FileKind::VisibleMask { scene, im, inst } => {
                        let mask = read_mask_png(&src)?;
                        let seed = base.split(1).split(scene).split(im).split(inst);
                        let out = if mask.is_empty() { mask } else { augment_mask(&mask, &params.mask, seed)?.mask };
                        write_mask_png(&dst, &out)?;
                        Ok((0, 1, 0))
                    }
                    FileKind::Copy => {
                        let bytes = std::fs::read(&src).map_err(|e| BopError::Io { path: src.clone(), source: e })?;
                        write_atomic(&dst, &bytes)?;
                        Ok((0, 0, 1))
                    }
                }
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    let total = counts.iter().fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    manifest.output("dataset", out_dir);
    manifest.detail("depth_images", total.0);
    manifest.detail("visible_masks", total.1);
    manifest.detail("copied_files", total.2);
    manifest.write(&out_dir.join("manifest.json"))
}
