use serde::{Deserialize, Serialize};

use super::MetricsError;

pub const N_DECILES: usize = 10;

/// Decile index `1..=10` of a visibility fraction; `[0.9, 1.0]` is decile 10.
pub fn visibility_decile(visib_fract: f64) -> Result<usize, MetricsError> {
    if !(0.0..=1.0).contains(&visib_fract) {
        return Err(MetricsError::InvalidInput(format!("visibility fraction {visib_fract} outside [0, 1]")));
    }
    Ok(((visib_fract * 10.0).floor() as usize + 1).min(N_DECILES))
}

/// Ten per-decile values where `-1` marks an empty decile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileReport {
    pub per_decile: [f64; N_DECILES],
    /// Mean of the defined entries, `-1` when none is defined.
    pub mean_defined: f64,
}

impl DecileReport {
    pub fn new(per_decile: [f64; N_DECILES]) -> Self {
        let defined: Vec<f64> = per_decile.iter().copied().filter(|v| *v != -1.0).collect();
        let mean_defined = if defined.is_empty() {
            -1.0
        } else {
            defined.iter().sum::<f64>() / defined.len() as f64
        };
        Self {
            per_decile,
            mean_defined,
        }
    }

    pub fn undefined() -> Self {
        Self::new([-1.0; N_DECILES])
    }
}

/// Unweighted mean of per-dataset scores.
pub fn aggregate_datasets(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::InvalidInput("no datasets to aggregate".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(MetricsError::InvalidInput(format!("non-finite dataset score {v}")));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decile_boundaries() {
        assert_eq!(visibility_decile(0.05).unwrap(), 1);
        assert_eq!(visibility_decile(0.0).unwrap(), 1);
        assert_eq!(visibility_decile(0.1).unwrap(), 2);
        assert_eq!(visibility_decile(0.9).unwrap(), 10);
        assert_eq!(visibility_decile(1.0).unwrap(), 10);
        assert!(visibility_decile(1.01).is_err());
        assert!(visibility_decile(-0.01).is_err());
        assert!(visibility_decile(f64::NAN).is_err());
    }

    #[test]
    fn report_skips_undefined() {
        let mut d = [-1.0; N_DECILES];
        d[3] = 0.2;
        d[9] = 0.6;
        assert!((DecileReport::new(d).mean_defined - 0.4).abs() < 1e-15);
        assert_eq!(DecileReport::undefined().mean_defined, -1.0);
    }

    #[test]
    fn supplementary_decile_row_reproduces_its_mean() {
        // LMO, MUSE row of the per-dataset detection table.
        let row = [-1.0, 0.002, 0.001, 0.006, 0.033, 0.113, 0.204, 0.358, 0.425, 0.611];
        assert!((DecileReport::new(row).mean_defined - 0.195).abs() < 5e-4);
    }

    #[test]
    fn aggregation_is_plain_mean() {
        assert_eq!(aggregate_datasets(&[0.25, 0.75]).unwrap(), 0.5);
        assert!(aggregate_datasets(&[]).is_err());
    }
}
