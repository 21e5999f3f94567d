//! Shared setups for the criterion benches.

use hopsim::engine::config::{GraphSource, PartitionerKind};
use hopsim::engine::sim::Cluster;
use hopsim::{CostModel, TrainConfig};

/// Mid-sized SBM cluster: 2000 vertices on 4 servers, two hops.
pub fn bench_config() -> TrainConfig {
    TrainConfig {
        graph: GraphSource::Sbm {
            blocks: vec![500; 4],
            p_in: 0.02,
            p_out: 0.001,
        },
        partitioner: PartitionerKind::Greedy { slack: 0.05 },
        servers: 4,
        fanouts: vec![10, 5],
        dim: 32,
        hidden: vec![16, 16],
        batch: 64,
        iterations: Some(2),
        cost: CostModel::default(),
        seed: 3,
        ..TrainConfig::default()
    }
}

pub fn bench_cluster() -> Cluster {
    Cluster::from_config(&bench_config()).expect("bench config is valid")
}
