//! k-hop sampling into micrographs, subgraph assembly and root redistribution.
//!
//! A [`Micrograph`] stores `L + 1` vertex layers. Layer `L` is `[root]` and
//! every layer `k - 1` starts with the vertices of layer `k` in the same order
//! (the dst-prefix convention of sampled message-flow blocks), followed by the
//! newly sampled neighbors. The self activation of a dst vertex at layer `k`
//! is therefore row `i` of layer `k - 1`, and layer 0 holds every vertex of
//! the micrograph.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::partition::PartitionMap;
use crate::graph::{Graph, VertexId};
use crate::rng::StreamKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    NodeWise,
    LayerWise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// `fanouts[h]` bounds hop `h + 1` counted from the root. In layer-wise
    /// mode it is the per-layer vertex budget instead.
    pub fanouts: Vec<usize>,
    pub mode: SamplingMode,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn node_wise(fanouts: Vec<usize>, seed: u64) -> Self {
        Self {
            fanouts,
            mode: SamplingMode::NodeWise,
            seed,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.fanouts.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.fanouts.is_empty() {
            return Err(Error::invalid("sampler needs at least one layer"));
        }
        if self.fanouts.contains(&0) {
            return Err(Error::invalid("fanouts must be >= 1"));
        }
        Ok(())
    }

    pub fn key(&self, epoch: u64, iteration: u64, root: VertexId) -> StreamKey {
        StreamKey::new(self.seed, epoch, iteration, root as u64)
    }
}

/// Aggregation edges between layer `k - 1` (sources) and layer `k` (dsts).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Block {
    /// `(dst index in layer k, src index in layer k - 1)`, sorted.
    pub pairs: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Micrograph {
    pub root: VertexId,
    /// `layers[0]` = innermost inputs, `layers[L]` = `[root]`.
    pub layers: Vec<Vec<VertexId>>,
    /// `blocks[k - 1]` feeds layer `k`.
    pub blocks: Vec<Block>,
}

impl Micrograph {
    pub fn n_layers(&self) -> usize {
        self.blocks.len()
    }

    /// Distinct vertices of the micrograph (layer 0 is a superset of every
    /// other layer).
    pub fn vertices(&self) -> &[VertexId] {
        &self.layers[0]
    }

    pub fn n_vertices(&self) -> usize {
        self.layers[0].len()
    }

    /// Total activation rows over all layers.
    pub fn n_entries(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn n_pairs(&self) -> usize {
        self.blocks.iter().map(|b| b.pairs.len()).sum()
    }

    /// Neighbor source indices of every dst in layer `k` (1-based layer).
    pub fn sources(&self, k: usize) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.layers[k].len()];
        for &(dst, src) in &self.blocks[k - 1].pairs {
            out[dst as usize].push(src);
        }
        out
    }
}

fn sample_node_wise(
    g: &Graph,
    frontier: &[VertexId],
    fanout: usize,
    rng: &mut impl Rng,
) -> (Vec<VertexId>, Block) {
    let mut next: Vec<VertexId> = frontier.to_vec();
    let mut index_of: HashMap<VertexId, u32> = frontier
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as u32))
        .collect();
    let mut pairs = Vec::new();
    for (dst, &v) in frontier.iter().enumerate() {
        let nbrs = g.neighbors(v);
        let picked: Vec<VertexId> = if nbrs.len() <= fanout {
            nbrs.to_vec()
        } else {
            let mut chosen: Vec<VertexId> = index::sample(rng, nbrs.len(), fanout)
                .into_iter()
                .map(|i| nbrs[i])
                .collect();
            chosen.sort_unstable();
            chosen
        };
        for u in picked {
            let src = *index_of.entry(u).or_insert_with(|| {
                next.push(u);
                (next.len() - 1) as u32
            });
            pairs.push((dst as u32, src));
        }
    }
    pairs.sort_unstable();
    (next, Block { pairs })
}

fn sample_layer_wise(
    g: &Graph,
    frontier: &[VertexId],
    budget: usize,
    rng: &mut impl Rng,
) -> (Vec<VertexId>, Block) {
    let candidates: Vec<VertexId> = frontier
        .iter()
        .flat_map(|&v| g.neighbors(v).iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let chosen: HashSet<VertexId> = if candidates.len() <= budget {
        candidates.iter().copied().collect()
    } else {
        index::sample(rng, candidates.len(), budget)
            .into_iter()
            .map(|i| candidates[i])
            .collect()
    };
    let mut next: Vec<VertexId> = frontier.to_vec();
    let mut index_of: HashMap<VertexId, u32> = frontier
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as u32))
        .collect();
    for &c in &candidates {
        if chosen.contains(&c) && !index_of.contains_key(&c) {
            index_of.insert(c, next.len() as u32);
            next.push(c);
        }
    }
    let mut pairs = Vec::new();
    for (dst, &v) in frontier.iter().enumerate() {
        for u in g.neighbors(v) {
            if chosen.contains(u) {
                pairs.push((dst as u32, index_of[u]));
            }
        }
    }
    pairs.sort_unstable();
    (next, Block { pairs })
}

/// Samples the micrograph of `root`. The result depends only on the graph,
/// the config and `key`, never on the server that runs it.
pub fn sample_micrograph(
    g: &Graph,
    root: VertexId,
    cfg: &SamplerConfig,
    key: StreamKey,
) -> Result<Micrograph> {
    if root as usize >= g.n_vertices() {
        return Err(Error::Range {
            id: root as i64,
            n: g.n_vertices(),
        });
    }
    cfg.validate()?;
    let n_layers = cfg.n_layers();
    let mut rng = key.rng();
    // Built outward from the root, reversed at the end.
    let mut layers = vec![vec![root]];
    let mut blocks = Vec::with_capacity(n_layers);
    for hop in 0..n_layers {
        let frontier = layers.last().unwrap();
        let (next, block) = match cfg.mode {
            SamplingMode::NodeWise => sample_node_wise(g, frontier, cfg.fanouts[hop], &mut rng),
            SamplingMode::LayerWise => sample_layer_wise(g, frontier, cfg.fanouts[hop], &mut rng),
        };
        layers.push(next);
        blocks.push(block);
    }
    layers.reverse();
    blocks.reverse();
    Ok(Micrograph {
        root,
        layers,
        blocks,
    })
}

/// The micrographs of one mini-batch. Its computation is the disjoint union
/// of the members' computations.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub members: Vec<Micrograph>,
    pub roots: Vec<VertexId>,
}

impl Subgraph {
    pub fn unique_vertices(&self) -> BTreeSet<VertexId> {
        self.members
            .iter()
            .flat_map(|m| m.vertices().iter().copied())
            .collect()
    }

    pub fn unique_vertex_count(&self) -> usize {
        self.unique_vertices().len()
    }
}

pub fn build_subgraph(micros: Vec<Micrograph>) -> Result<Subgraph> {
    let mut seen = HashSet::new();
    for m in &micros {
        if !seen.insert(m.root) {
            return Err(Error::invalid(format!("duplicate root {}", m.root)));
        }
    }
    let roots = micros.iter().map(|m| m.root).collect();
    Ok(Subgraph {
        members: micros,
        roots,
    })
}

/// Original mini-batches and their regrouping by root home server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniBatchPlan {
    pub batches: Vec<Vec<VertexId>>,
    /// `groups[d][s]`: roots of batch `d` homed at server `s`, in batch order.
    pub groups: Vec<Vec<Vec<VertexId>>>,
}

impl MiniBatchPlan {
    pub fn n_servers(&self) -> usize {
        self.groups.first().map_or(0, Vec::len)
    }

    /// Roots received by each server across all batches.
    pub fn server_totals(&self) -> Vec<usize> {
        let mut totals = vec![0; self.n_servers()];
        for per_model in &self.groups {
            for (s, g) in per_model.iter().enumerate() {
                totals[s] += g.len();
            }
        }
        totals
    }
}

pub fn redistribute_roots(batches: &[Vec<VertexId>], p: &PartitionMap) -> MiniBatchPlan {
    let groups = batches
        .iter()
        .map(|batch| {
            let mut per_server = vec![Vec::new(); p.n_servers()];
            for &v in batch {
                per_server[p.home(v) as usize].push(v);
            }
            per_server
        })
        .collect();
    MiniBatchPlan {
        batches: batches.to_vec(),
        groups,
    }
}

/// `(max - min) / mean` of per-server root totals; 0 for an empty plan.
pub fn load_imbalance(plan: &MiniBatchPlan) -> f64 {
    let totals = plan.server_totals();
    let sum: usize = totals.iter().sum();
    if totals.is_empty() || sum == 0 {
        return 0.0;
    }
    let max = *totals.iter().max().unwrap() as f64;
    let min = *totals.iter().min().unwrap() as f64;
    (max - min) / (sum as f64 / totals.len() as f64)
}
