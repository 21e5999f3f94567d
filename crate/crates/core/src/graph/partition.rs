//! Vertex-to-server placement.

use std::collections::VecDeque;

use super::{Graph, VertexId};
use crate::error::{Error, Result};
use crate::rng::mix64;

pub type ServerId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMap {
    home: Vec<ServerId>,
    n_servers: usize,
}

impl PartitionMap {
    pub fn new(home: Vec<ServerId>, n_servers: usize) -> Result<Self> {
        if n_servers == 0 {
            return Err(Error::invalid("partition needs at least one server"));
        }
        if let Some(bad) = home.iter().find(|&&s| s as usize >= n_servers) {
            return Err(Error::invalid(format!(
                "server id {bad} out of range for {n_servers} servers"
            )));
        }
        Ok(Self { home, n_servers })
    }

    /// Every vertex on server 0.
    pub fn single(n: usize) -> Self {
        Self {
            home: vec![0; n],
            n_servers: 1,
        }
    }

    #[inline]
    pub fn home(&self, v: VertexId) -> ServerId {
        self.home[v as usize]
    }

    pub fn homes(&self) -> &[ServerId] {
        &self.home
    }

    pub fn n_servers(&self) -> usize {
        self.n_servers
    }

    pub fn n_vertices(&self) -> usize {
        self.home.len()
    }

    pub fn part_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_servers];
        for &s in &self.home {
            sizes[s as usize] += 1;
        }
        sizes
    }

    /// Applies a permutation of server ids.
    pub fn relabel(&self, perm: &[ServerId]) -> Result<Self> {
        if perm.len() != self.n_servers {
            return Err(Error::invalid("relabel permutation has wrong length"));
        }
        let home = self.home.iter().map(|&s| perm[s as usize]).collect();
        Self::new(home, self.n_servers)
    }
}

pub fn partition_hash(g: &Graph, n_servers: usize, seed: u64) -> Result<PartitionMap> {
    if n_servers == 0 {
        return Err(Error::invalid("S must be >= 1"));
    }
    let home = (0..g.n_vertices() as u64)
        .map(|v| (mix64(seed, v) % n_servers as u64) as ServerId)
        .collect();
    PartitionMap::new(home, n_servers)
}

/// BFS region growing. Parts are filled one at a time up to
/// `ceil((1 + slack) * n / S)` vertices, each region seeded at the
/// highest-degree unassigned vertex (ties to the lower id). Isolated vertices
/// are dealt round-robin over parts that still have room.
///
/// `seed` is accepted for interface symmetry; the procedure is fully
/// determined by the graph.
pub fn partition_greedy_locality(
    g: &Graph,
    n_servers: usize,
    slack: f64,
    _seed: u64,
) -> Result<PartitionMap> {
    if n_servers == 0 {
        return Err(Error::invalid("S must be >= 1"));
    }
    if slack.is_nan() || slack < 0.0 {
        return Err(Error::invalid("slack must be >= 0"));
    }
    let n = g.n_vertices();
    let cap = (((1.0 + slack) * n as f64) / n_servers as f64).ceil().max(1.0) as usize;

    let mut order: Vec<VertexId> = (0..n as VertexId).collect();
    order.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));

    let mut home: Vec<Option<ServerId>> = vec![None; n];
    let mut sizes = vec![0usize; n_servers];
    let mut part = 0usize;
    let mut queue = VecDeque::new();

    for &seed_v in &order {
        if home[seed_v as usize].is_some() || g.degree(seed_v) == 0 {
            continue;
        }
        if sizes[part] >= cap {
            part += 1;
        }
        home[seed_v as usize] = Some(part as ServerId);
        sizes[part] += 1;
        queue.clear();
        queue.push_back(seed_v);
        'bfs: while let Some(u) = queue.pop_front() {
            for &w in g.neighbors(u) {
                if sizes[part] >= cap {
                    break 'bfs;
                }
                if home[w as usize].is_none() {
                    home[w as usize] = Some(part as ServerId);
                    sizes[part] += 1;
                    queue.push_back(w);
                }
            }
        }
    }

    let mut rr = 0usize;
    for v in 0..n {
        if home[v].is_some() {
            continue;
        }
        while sizes[rr % n_servers] >= cap {
            rr += 1;
        }
        let s = rr % n_servers;
        home[v] = Some(s as ServerId);
        sizes[s] += 1;
        rr += 1;
    }

    PartitionMap::new(home.into_iter().map(|h| h.unwrap()).collect(), n_servers)
}

/// Fraction of undirected edges whose endpoints live on different servers.
/// An edgeless graph has cut 0.
pub fn edge_cut(g: &Graph, p: &PartitionMap) -> Result<f64> {
    if p.n_vertices() != g.n_vertices() {
        return Err(Error::invalid(format!(
            "partition covers {} vertices, graph has {}",
            p.n_vertices(),
            g.n_vertices()
        )));
    }
    let (mut cut, mut total) = (0usize, 0usize);
    for (u, v) in g.undirected_edges() {
        total += 1;
        if p.home(u) != p.home(v) {
            cut += 1;
        }
    }
    Ok(if total == 0 {
        0.0
    } else {
        cut as f64 / total as f64
    })
}
