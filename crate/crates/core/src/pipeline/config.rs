use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::sampling::SamplerSeed;

/// How the dense stage subsamples the full clouds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenseSampling {
    /// Gumbel-Top-k weighted by interpolated visibility.
    #[default]
    Dynamic,
    /// Farthest-point sampling, ignoring probabilities.
    Uniform,
}

/// How background/occlusion probabilities are read from the coarse `Ã`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalMode {
    /// Token entry over the point's own row/column mass.
    #[default]
    Conditional,
    /// Raw token-row / token-column entries.
    TokenEntries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub n_coarse: usize,
    pub n_dense: usize,
    /// Number of hypotheses kept for refinement.
    pub k: usize,
    /// Refinement iterations per hypothesis; 0 keeps the coarse hypotheses.
    pub n_refine: usize,
    pub tau: f64,
    pub corr_per_hyp: usize,
    pub seed: SamplerSeed,
    pub dense_sampling: DenseSampling,
    pub marginals: MarginalMode,
    /// Weight `w` of the spatial prior `-w·d²/2σ²` on refinement logits.
    pub pos_weight: f64,
    /// Width `σ` of the spatial prior as a fraction of the model extent.
    pub pos_sigma: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n_coarse: 196,
            n_dense: 2048,
            k: 8,
            n_refine: 8,
            tau: 0.05,
            corr_per_hyp: 6,
            seed: SamplerSeed::default(),
            dense_sampling: DenseSampling::Dynamic,
            marginals: MarginalMode::Conditional,
            pos_weight: 0.5,
            pos_sigma: 0.25,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::InvalidConfig(msg));
        for (name, v) in [("n_coarse", self.n_coarse), ("n_dense", self.n_dense), ("k", self.k)] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.corr_per_hyp < 3 {
            return bad(format!("corr_per_hyp must be at least 3, got {}", self.corr_per_hyp));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.pos_weight.is_finite() && self.pos_weight >= 0.0) {
            return bad(format!("pos_weight must be non-negative, got {}", self.pos_weight));
        }
        if !(self.pos_sigma.is_finite() && self.pos_sigma > 0.0) {
            return bad(format!("pos_sigma must be positive, got {}", self.pos_sigma));
        }
        Ok(())
    }

    /// Candidate hypotheses drawn before top-K selection.
    pub fn pool_size(&self) -> usize {
        4 * self.k
    }
}
