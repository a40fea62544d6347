pub mod augment;
pub mod estimate;
pub mod evaluate;
pub mod report;
pub mod synth;

use crate::config::RunConfig;

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Globals {
    pub seed: Option<u64>,
    pub threads: usize,
    pub config: RunConfig,
}
