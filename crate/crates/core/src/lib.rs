//! Deterministic simulator for distributed GNN training strategies.
//!
//! The crate models an `N`-server cluster where every server holds one shard
//! of the vertex features and one replica of a small GNN. Four training
//! strategies are simulated with exact byte accounting:
//!
//! * model-centric: stationary models fetch remote features,
//! * naive feature-centric: a model walks the servers carrying partial
//!   aggregation state,
//! * locality-optimized: every model trains the micrographs homed at its own
//!   server, with no migration,
//! * micrograph-based (`hopgnn`): roots are regrouped by home server and
//!   models migrate along a trace table, optionally with feature
//!   pre-gathering and greedy micrograph merging.
//!
//! The GNN math is exact 64-bit dense forward/backward so the strategies can
//! be compared on the parameters they produce, not only on traffic.

pub mod engine;
pub mod error;
pub mod featstore;
pub mod fixture;
pub mod gnn;
pub mod graph;
pub mod report;
pub mod rng;
pub mod sampler;

pub use engine::config::{Strategy, TrainConfig};
pub use engine::cost::CostModel;
pub use engine::metrics::EpochMetrics;
pub use engine::trace::TraceTable;
pub use error::{Error, Result};
pub use featstore::ledger::{Category, CommLedger};
pub use featstore::FeatureStore;
pub use gnn::{Arch, ModelState};
pub use graph::partition::PartitionMap;
pub use graph::{Graph, VertexId};
pub use sampler::{Micrograph, SamplerConfig, SamplingMode, Subgraph};
