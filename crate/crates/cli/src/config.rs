use std::path::Path;

use occlupose::augment::{DepthAugParams, MaskAugParams};
use occlupose::metrics::MetricThresholds;
use occlupose::pipeline::PipelineConfig;
use occlupose::sampling::SamplerSeed;
use occlupose::synth::SceneConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, ExitKind};

/// Everything a run can be configured with, one TOML table per command.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub benchmark: BenchmarkConfig,
    pub synth: SceneConfig,
    pub pipeline: PipelineConfig,
    pub metrics: MetricThresholds,
    pub augment: AugmentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub n_scenes: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { n_scenes: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub depth: DepthAugParams,
    pub mask: MaskAugParams,
}

fn invalid(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::msg(ExitKind::Validation, format!("{field}: {e}"))
}

impl RunConfig {
    /// Reads a TOML file; absent tables and keys take their defaults, but a
    /// file without any content is rejected as a likely mistake.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(e).context(format!("reading config {}", path.display())))?;
        Self::parse(&text).map_err(|e| e.context(format!("config {}", path.display())))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let meaningful = text.lines().any(|l| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        });
        if !meaningful {
            return Err(CliError::msg(ExitKind::Validation, "config file is empty"));
        }
        toml::from_str(text).map_err(CliError::validation)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    /// Replaces every seed with ones derived from `seed`.
    pub fn apply_seed(&mut self, seed: u64) {
        let base = SamplerSeed::from_seed(seed);
        self.synth.seed = base.split(0);
        self.pipeline.seed = base.split(1);
    }

    pub fn validate_synth(&self) -> CliResult<()> {
        if self.benchmark.n_scenes == 0 {
            return Err(invalid("benchmark.n_scenes", "must be at least 1"));
        }
        self.synth.validate().map_err(|e| invalid("synth", e))
    }

    pub fn validate_pipeline(&self) -> CliResult<()> {
        self.pipeline.validate().map_err(|e| invalid("pipeline", e))
    }

    pub fn validate_metrics(&self) -> CliResult<()> {
        self.metrics.validate().map_err(|e| invalid("metrics", e))
    }

    pub fn validate_augment(&self) -> CliResult<()> {
        self.augment.depth.validate().map_err(|e| invalid("augment.depth", e))?;
        self.augment.mask.validate().map_err(|e| invalid("augment.mask", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_files_keep_defaults() {
        let c = RunConfig::parse("[pipeline]\nk = 2\n").unwrap();
        assert_eq!(c.pipeline.k, 2);
        assert_eq!(c.synth, SceneConfig::default());
    }

    #[test]
    fn empty_and_unknown_keys_are_validation_errors() {
        for text in ["", "  \n# only a comment\n", "[pipeline]\nbogus = 1\n", "[nope]\n"] {
            assert_eq!(RunConfig::parse(text).unwrap_err().kind, ExitKind::Validation, "{text:?}");
        }
    }

    #[test]
    fn validation_names_the_table() {
        let c = RunConfig::parse("[synth]\npoints_per_model = 0\n").unwrap();
        let msg = c.validate_synth().unwrap_err().to_string();
        assert!(msg.starts_with("synth:") && msg.contains("points_per_model"), "{msg}");
    }
}
