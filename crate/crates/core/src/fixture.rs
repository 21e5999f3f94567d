//! Two-server, eight-vertex example cluster.
//!
//! The graph is the ring `0-1-5-6-7-4-2-3-0`. Server 0 holds `{4,5,6,7}` and
//! server 1 holds `{0,1,2,3}`. With two hops and fanout 2 sampling is
//! deterministic:
//!
//! | root | micrograph      |
//! |------|-----------------|
//! | 6    | {6,5,7,1,4}     |
//! | 5    | {5,1,6,0,7}     |
//! | 3    | {3,0,2,1,4}     |
//! | 0    | {0,1,3,5,2}     |
//!
//! Mini-batch 0 is `[6,3]`, mini-batch 1 is `[5,0]`.

use crate::engine::cost::CostModel;
use crate::engine::sim::Cluster;
use crate::error::Result;
use crate::featstore::{init_features, FeatureSource};
use crate::gnn::{Arch, LabelOracle, ModelState};
use crate::graph::partition::PartitionMap;
use crate::graph::{Graph, VertexId};
use crate::sampler::SamplerConfig;

pub const RING: [(VertexId, VertexId); 8] = [(0, 1), (1, 5), (5, 6), (6, 7), (7, 4), (4, 2), (2, 3), (3, 0)];

pub fn ring_graph() -> Graph {
    Graph::from_undirected_edges(8, &RING).expect("static fixture")
}

pub fn ring_partition() -> PartitionMap {
    PartitionMap::new(vec![1, 1, 1, 1, 0, 0, 0, 0], 2).expect("static fixture")
}

pub fn ring_batches() -> Vec<Vec<VertexId>> {
    vec![vec![6, 3], vec![5, 0]]
}

pub fn ring_cluster(arch: Arch, cost: CostModel) -> Result<Cluster> {
    let p = ring_partition();
    let features = init_features(&p, 4, FeatureSource::Generated { seed: 11 })?;
    let model = ModelState::init(arch, 4, &[3, 3], 2, 12)?;
    Cluster::new(
        ring_graph(),
        p,
        features,
        LabelOracle::new(2, 13)?,
        SamplerConfig::node_wise(vec![2, 2], 14),
        model,
        cost,
        2,
        Some(1),
        0.1,
        15,
        false,
    )
}
