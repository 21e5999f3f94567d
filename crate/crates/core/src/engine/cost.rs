//! Simulated-time cost model.

use crate::error::{Error, Result};
use crate::featstore::ledger::CommLedger;
use crate::graph::partition::ServerId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    /// Bytes per second on every link; `f64::INFINITY` makes bytes free.
    pub bandwidth: f64,
    /// Seconds charged per message.
    pub latency: f64,
    /// Seconds added at the end of every time step.
    pub sync_overhead: f64,
    /// Seconds per kernel launch (one per trained micrograph batch).
    pub kernel_launch: f64,
    /// Seconds per processed `vertex x feature-dim` unit.
    pub compute_rate: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        // Roughly a 10 Gb/s network and a GPU that is fast relative to it.
        Self {
            bandwidth: 1.25e9,
            latency: 5e-5,
            sync_overhead: 1e-3,
            kernel_launch: 2e-4,
            compute_rate: 1e-10,
        }
    }
}

impl CostModel {
    pub fn zero() -> Self {
        Self {
            bandwidth: f64::INFINITY,
            latency: 0.0,
            sync_overhead: 0.0,
            kernel_launch: 0.0,
            compute_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("latency", self.latency),
            ("sync_overhead", self.sync_overhead),
            ("kernel_launch", self.kernel_launch),
            ("compute_rate", self.compute_rate),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and >= 0")));
            }
        }
        if self.bandwidth.is_nan() || self.bandwidth <= 0.0 {
            return Err(Error::invalid("bandwidth must be > 0"));
        }
        Ok(())
    }

    pub fn comm_seconds(&self, messages: u64, bytes: u64) -> f64 {
        messages as f64 * self.latency + bytes as f64 / self.bandwidth
    }

    pub fn compute_seconds(&self, launches: u64, work: u64) -> f64 {
        launches as f64 * self.kernel_launch + work as f64 * self.compute_rate
    }
}

/// What one server does during one time step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServerLoad {
    pub launches: u64,
    /// Processed `vertex x dim` units.
    pub work: u64,
    /// Messages received.
    pub messages: u64,
    /// Bytes received.
    pub bytes: u64,
}

impl ServerLoad {
    pub fn seconds(&self, cm: &CostModel) -> f64 {
        cm.compute_seconds(self.launches, self.work) + cm.comm_seconds(self.messages, self.bytes)
    }
}

/// Fills the receive side of `loads` from a per-step ledger. Communication is
/// charged to the receiving server.
pub fn add_inbound(loads: &mut [ServerLoad], ledger: &CommLedger) {
    for (s, load) in loads.iter_mut().enumerate() {
        let inbound = ledger.inbound(s as ServerId);
        load.messages += inbound.messages;
        load.bytes += inbound.bytes;
    }
}

/// Slowest server plus the per-step synchronization overhead.
pub fn simulated_step_time(loads: &[ServerLoad], cm: &CostModel) -> f64 {
    slowest(loads, cm) + cm.sync_overhead
}

/// Slowest server, no step overhead (used for the final gradient sync).
pub fn slowest(loads: &[ServerLoad], cm: &CostModel) -> f64 {
    loads.iter().map(|l| l.seconds(cm)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_costs_nothing() {
        let loads = [ServerLoad {
            launches: 3,
            work: 1000,
            messages: 4,
            bytes: 1 << 20,
        }];
        assert_eq!(simulated_step_time(&loads, &CostModel::zero()), 0.0);
    }

    #[test]
    fn one_message() {
        let cm = CostModel {
            bandwidth: 1e6,
            latency: 0.001,
            ..CostModel::zero()
        };
        let loads = [ServerLoad {
            messages: 1,
            bytes: 1_000_000,
            ..Default::default()
        }];
        assert!((simulated_step_time(&loads, &cm) - 1.001).abs() < 1e-12);
    }

    #[test]
    fn max_plus_sync() {
        let cm = CostModel {
            kernel_launch: 1.0,
            sync_overhead: 0.5,
            ..CostModel::zero()
        };
        let loads = [
            ServerLoad {
                launches: 1,
                ..Default::default()
            },
            ServerLoad {
                launches: 3,
                ..Default::default()
            },
        ];
        assert_eq!(simulated_step_time(&loads, &cm), 3.5);
    }

    #[test]
    fn validation() {
        assert!(CostModel::default().validate().is_ok());
        assert!(CostModel::zero().validate().is_ok());
        let bad = CostModel {
            latency: -1.0,
            ..CostModel::zero()
        };
        assert!(bad.validate().is_err());
        let bad = CostModel {
            bandwidth: 0.0,
            ..CostModel::zero()
        };
        assert!(bad.validate().is_err());
    }
}
