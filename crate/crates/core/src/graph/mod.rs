//! Immutable CSR graph.
//!
//! Inputs are treated as undirected and stored with both directions. The
//! sampler reads a vertex's neighbor range as its in-neighbors (message
//! sources).

pub mod io;
pub mod partition;
pub mod sbm;

use crate::error::{Error, Result};

pub type VertexId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
}

impl Graph {
    /// Builds a canonical undirected graph on `n` vertices. Each pair is
    /// stored in both directions; duplicates and self-loops are dropped.
    pub fn from_undirected_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let mut directed = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            for id in [u, v] {
                if id as usize >= n {
                    return Err(Error::Range { id: id as i64, n });
                }
            }
            if u != v {
                directed.push((u, v));
                directed.push((v, u));
            }
        }
        Ok(Self::from_directed_pairs(n, directed))
    }

    fn from_directed_pairs(n: usize, mut pairs: Vec<(VertexId, VertexId)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in &pairs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.into_iter().map(|(_, v)| v).collect();
        Graph { offsets, targets }
    }

    /// Assembles a graph from raw CSR arrays, checking canonical form.
    pub fn from_csr(offsets: Vec<usize>, targets: Vec<VertexId>) -> Result<Self> {
        if offsets.is_empty() || offsets[0] != 0 {
            return Err(Error::Format("offsets must start at 0".into()));
        }
        let n = offsets.len() - 1;
        if offsets[n] != targets.len() {
            return Err(Error::Format("last offset must equal target count".into()));
        }
        for v in 0..n {
            let (lo, hi) = (offsets[v], offsets[v + 1]);
            if lo > hi {
                return Err(Error::Format(format!("offsets decrease at vertex {v}")));
            }
            let range = &targets[lo..hi];
            if range.iter().any(|&t| t as usize >= n) {
                return Err(Error::Format(format!("target out of range at vertex {v}")));
            }
            if range.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Format(format!(
                    "neighbors of vertex {v} not strictly increasing"
                )));
            }
        }
        Ok(Graph { offsets, targets })
    }

    pub fn n_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of stored (directed) adjacency entries.
    pub fn n_arcs(&self) -> usize {
        self.targets.len()
    }

    /// Number of undirected edges, self-loops excluded.
    pub fn n_edges(&self) -> usize {
        self.undirected_edges().count()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[VertexId] {
        &self.targets
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_vertices() as VertexId)
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (0..self.n_vertices() as VertexId).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Returns a copy with a self-loop on every vertex.
    pub fn with_self_loops(&self) -> Self {
        let mut pairs: Vec<_> = (0..self.n_vertices() as VertexId)
            .flat_map(|u| self.neighbors(u).iter().map(move |&v| (u, v)))
            .collect();
        pairs.extend((0..self.n_vertices() as VertexId).map(|v| (v, v)));
        Self::from_directed_pairs(self.n_vertices(), pairs)
    }
}
