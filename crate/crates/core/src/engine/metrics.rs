use crate::error::{Error, Result};
use crate::featstore::ledger::{Category, CommLedger};
use crate::gnn::ModelState;

/// Per-epoch results of one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub strategy: String,
    pub iterations: usize,
    pub sim_seconds: f64,
    /// Time steps summed over iterations.
    pub steps: usize,
    pub ledger: CommLedger,
    /// Simulated busy seconds per server.
    pub busy: Vec<f64>,
    pub miss_rate: f64,
    pub alpha: f64,
    /// Mean root-redistribution imbalance over iterations.
    pub imbalance: f64,
    /// Largest pre-gathered staging footprint on any server in any iteration.
    pub max_staged_bytes: u64,
    /// Trace-table columns in use (1 for single-step strategies).
    pub columns: usize,
}

impl EpochMetrics {
    pub fn bytes(&self, category: Category) -> u64 {
        self.ledger.category_bytes(category)
    }

    pub fn feature_bytes(&self) -> u64 {
        self.bytes(Category::Feature)
    }

    pub fn total_bytes(&self) -> u64 {
        self.ledger.total_bytes()
    }
}

/// Remote training-data bytes per iteration over parameter bytes.
pub fn alpha(feature_bytes_per_iteration: f64, param_bytes: u64) -> Result<f64> {
    if param_bytes == 0 {
        return Err(Error::invalid("model has no parameters"));
    }
    Ok(feature_bytes_per_iteration / param_bytes as f64)
}

pub fn alpha_ratio(metrics: &EpochMetrics, model: &ModelState) -> Result<f64> {
    let per_iter = if metrics.iterations == 0 {
        0.0
    } else {
        metrics.feature_bytes() as f64 / metrics.iterations as f64
    };
    alpha(per_iter, model.param_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(0.0, 4000).unwrap(), 0.0);
        assert!((alpha(53_600.0, 4000).unwrap() - 13.4).abs() < 1e-12);
        assert!(alpha(1.0, 0).is_err());
    }
}
