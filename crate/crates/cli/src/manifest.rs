use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use occlupose::bop::write_atomic;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliResult;

/// Record of one command invocation, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// `--seed`, when given; it overrides every seed in `config`.
    pub seed: Option<u64>,
    pub threads: usize,
    pub config: RunConfig,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub details: serde_json::Map<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, threads: usize, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            threads,
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timings: BTreeMap::new(),
            details: serde_json::Map::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.to_path_buf());
    }

    pub fn output(&mut self, name: &str, path: &Path) {
        self.outputs.insert(name.to_string(), path.to_path_buf());
    }

    pub fn detail(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("manifest detail serializes");
        self.details.insert(name.to_string(), v);
    }

    /// Runs `f`, recording its duration under `stage`.
    pub fn timed<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        self.timings.insert(stage.to_string(), start.elapsed().as_secs_f64());
        r
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
        Ok(())
    }
}

/// `results.csv` → `results.manifest.json` in the same directory.
pub fn sibling_manifest_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    output.with_file_name(format!("{stem}.manifest.json"))
}
