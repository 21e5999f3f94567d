//! Stochastic block model generator.

use super::{Graph, VertexId};
use crate::error::{Error, Result};
use crate::rng::{mix64, unit_f64};

#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

impl SbmParams {
    pub fn n_vertices(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_vertices() == 0 {
            return Err(Error::invalid("SBM parameters have no vertices"));
        }
        if self.block_sizes.contains(&0) {
            return Err(Error::invalid("SBM block sizes must be >= 1"));
        }
        let ok = (0.0..=1.0).contains(&self.p_in)
            && (0.0..=1.0).contains(&self.p_out)
            && self.p_out <= self.p_in;
        if !ok {
            return Err(Error::invalid(format!(
                "need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            )));
        }
        Ok(())
    }
}

/// Samples every unordered pair once; the coin for `(u, v)` depends only on
/// `(seed, u, v)`.
pub fn generate_sbm(params: &SbmParams) -> Result<Graph> {
    params.validate()?;
    let n = params.n_vertices();
    let block: Vec<usize> = params
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        let row_key = mix64(params.seed, u as u64);
        for v in u + 1..n {
            let p = if block[u] == block[v] {
                params.p_in
            } else {
                params.p_out
            };
            if p > 0.0 && unit_f64(mix64(row_key, v as u64)) < p {
                edges.push((u as VertexId, v as VertexId));
            }
        }
    }
    Graph::from_undirected_edges(n, &edges)
}
