#![allow(dead_code)]

use hopsim::engine::config::{GraphSource, PartitionerKind};
use hopsim::{CostModel, TrainConfig};

/// Largest elementwise relative difference, `|a - b| / max(|a|, |b|)`.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let scale = x.abs().max(y.abs());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

pub fn small_config(servers: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        graph: GraphSource::Sbm {
            blocks: vec![40, 40],
            p_in: 0.2,
            p_out: 0.02,
        },
        partitioner: PartitionerKind::Greedy { slack: 0.1 },
        servers,
        fanouts: vec![3, 3],
        dim: 6,
        hidden: vec![5, 5],
        classes: 3,
        batch: 4,
        iterations: Some(2),
        cost: CostModel::default(),
        seed,
        ..TrainConfig::default()
    }
}
