use occlupose::pipeline::{FeatureProvider, OracleProvider, RandomProvider};
use occlupose::Pose;

use crate::error::{CliError, CliResult, ExitKind};

pub const PROVIDERS: &[&str] = &["oracle[:noise=<sigma>,dim=<n>]", "random[:seed=<n>,dim=<n>]"];

/// Parsed `--provider` argument, e.g. `oracle:noise=0.1,dim=256`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProviderSpec {
    Oracle { noise: f64, dim: usize },
    Random { seed: Option<u64>, dim: usize },
}

fn bad(msg: impl std::fmt::Display) -> CliError {
    CliError::msg(ExitKind::Validation, msg)
}

fn value<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse().map_err(|_| bad(format!("provider option {key}: cannot parse {v:?}")))
}

impl ProviderSpec {
    pub fn parse(spec: &str) -> CliResult<Self> {
        let (name, opts) = spec.split_once(':').unwrap_or((spec, ""));
        let pairs = opts
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|kv| kv.split_once('=').ok_or_else(|| bad(format!("provider option {kv:?} is not key=value"))))
            .collect::<CliResult<Vec<_>>>()?;
        let mut out = match name {
            "oracle" => ProviderSpec::Oracle { noise: 0.0, dim: 256 },
            "random" => ProviderSpec::Random { seed: None, dim: 32 },
            other => {
                return Err(bad(format!("unknown provider {other:?}; available: {}", PROVIDERS.join(", "))));
            }
        };
        for (k, v) in pairs {
            match (&mut out, k) {
                (ProviderSpec::Oracle { noise, .. }, "noise") => *noise = value(k, v)?,
                (ProviderSpec::Oracle { dim, .. } | ProviderSpec::Random { dim, .. }, "dim") => *dim = value(k, v)?,
                (ProviderSpec::Random { seed, .. }, "seed") => *seed = Some(value(k, v)?),
                _ => return Err(bad(format!("provider {name} has no option {k:?}"))),
            }
        }
        match out {
            ProviderSpec::Oracle { noise, .. } if !(noise.is_finite() && noise >= 0.0) => {
                Err(bad(format!("provider option noise must be finite and non-negative, got {noise}")))
            }
            ProviderSpec::Oracle { dim: 0, .. } | ProviderSpec::Random { dim: 0, .. } => Err(bad("provider option dim must be at least 1")),
            ok => Ok(ok),
        }
    }

    /// Provider for one instance; the oracle needs that instance's pose.
    pub fn build(&self, gt_pose: &Pose, default_seed: u64) -> Box<dyn FeatureProvider<f64>> {
        match *self {
            ProviderSpec::Oracle { noise, dim } => Box::new(OracleProvider::new(*gt_pose, noise, dim)),
            ProviderSpec::Random { seed, dim } => Box::new(RandomProvider {
                dim,
                seed: seed.unwrap_or(default_seed),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names_and_options() {
        assert_eq!(ProviderSpec::parse("oracle").unwrap(), ProviderSpec::Oracle { noise: 0.0, dim: 256 });
        assert_eq!(
            ProviderSpec::parse("oracle:noise=0.25,dim=64").unwrap(),
            ProviderSpec::Oracle { noise: 0.25, dim: 64 }
        );
        assert_eq!(ProviderSpec::parse("random:seed=7").unwrap(), ProviderSpec::Random { seed: Some(7), dim: 32 });
    }

    #[test]
    fn unknown_provider_lists_the_available_ones() {
        let msg = ProviderSpec::parse("magic").unwrap_err().to_string();
        assert!(msg.contains("oracle") && msg.contains("random"), "{msg}");
    }

    #[test]
    fn rejects_bad_options() {
        for s in ["oracle:noise=-1", "oracle:seed=3", "random:dim=0", "oracle:noise", "random:seed=x"] {
            assert_eq!(ProviderSpec::parse(s).unwrap_err().kind, ExitKind::Validation, "{s}");
        }
    }
}
