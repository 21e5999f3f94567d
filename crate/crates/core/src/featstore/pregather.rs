//! Per-iteration pre-gathering of remote feature rows.
//!
//! Which vertices a server will touch in an iteration is known once roots are
//! redistributed and micrographs sampled, independent of which model trains
//! them. The planner fetches the deduplicated remote set once, in one message
//! per source server, and the staged rows are dropped at iteration end.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ledger::{Category, CommLedger};
use super::{FeatureStore, ELEM_BYTES};
use crate::graph::partition::{PartitionMap, ServerId};
use crate::graph::VertexId;
use crate::sampler::Micrograph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PregatherPlan {
    pub at: ServerId,
    /// Remote ids grouped by home server, ascending.
    pub by_source: BTreeMap<ServerId, Vec<VertexId>>,
}

impl PregatherPlan {
    pub fn len(&self) -> usize {
        self.by_source.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.by_source.values().flatten().copied()
    }
}

pub fn plan_pregather<'a>(
    at: ServerId,
    micrographs: impl IntoIterator<Item = &'a Micrograph>,
    p: &PartitionMap,
) -> PregatherPlan {
    let remote: BTreeSet<VertexId> = micrographs
        .into_iter()
        .flat_map(|m| m.vertices().iter().copied())
        .filter(|&v| p.home(v) != at)
        .collect();
    let mut by_source: BTreeMap<ServerId, Vec<VertexId>> = BTreeMap::new();
    for v in remote {
        by_source.entry(p.home(v)).or_default().push(v);
    }
    PregatherPlan { at, by_source }
}

/// Rows staged at one server for the current iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StagedTable {
    pub rows: HashMap<VertexId, Vec<f32>>,
    pub bytes: u64,
}

impl StagedTable {
    pub fn get(&self, v: VertexId) -> Option<&[f32]> {
        self.rows.get(&v).map(Vec::as_slice)
    }
}

pub fn execute_pregather(
    plan: &PregatherPlan,
    fs: &FeatureStore,
    ledger: &mut CommLedger,
) -> StagedTable {
    let mut staged = StagedTable::default();
    for (&src, ids) in &plan.by_source {
        if ids.is_empty() {
            continue;
        }
        let bytes = ids.len() as u64 * fs.dim() as u64 * ELEM_BYTES;
        ledger.record(src, plan.at, Category::Feature, bytes);
        staged.bytes += bytes;
        for &v in ids {
            staged.rows.insert(v, fs.row(v).to_vec());
        }
    }
    staged
}
