//! Co-location ratios of micrographs and subgraphs with their roots.

use std::io::Write;

use rand::seq::index;
use rayon::prelude::*;

use crate::engine::config::PartitionerKind;
use crate::engine::sim::build_partition;
use crate::error::{Error, Result};
use crate::graph::partition::PartitionMap;
use crate::graph::Graph;
use crate::rng::{mix_all, stream};
use crate::sampler::{sample_micrograph, Micrograph, SamplerConfig, SamplingMode, Subgraph};

/// Whether a root counts as co-located with itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootCounting {
    #[default]
    Inclusive,
    NonRoot,
}

fn server_counts(vertices: impl Iterator<Item = u32>, p: &PartitionMap) -> (Vec<usize>, usize) {
    let mut counts = vec![0; p.n_servers()];
    let mut total = 0;
    for v in vertices {
        counts[p.home(v) as usize] += 1;
        total += 1;
    }
    (counts, total)
}

pub fn r_micro(m: &Micrograph, p: &PartitionMap) -> f64 {
    r_micro_with(m, p, RootCounting::Inclusive)
}

pub fn r_micro_with(m: &Micrograph, p: &PartitionMap, counting: RootCounting) -> f64 {
    let (counts, total) = server_counts(m.vertices().iter().copied(), p);
    colocated(counts[p.home(m.root) as usize], counting) / total as f64
}

fn colocated(count: usize, counting: RootCounting) -> f64 {
    match counting {
        RootCounting::Inclusive => count as f64,
        RootCounting::NonRoot => count.saturating_sub(1) as f64,
    }
}

pub fn r_sub(sg: &Subgraph, p: &PartitionMap) -> Result<f64> {
    r_sub_with(sg, p, RootCounting::Inclusive)
}

pub fn r_sub_with(sg: &Subgraph, p: &PartitionMap, counting: RootCounting) -> Result<f64> {
    if sg.roots.is_empty() {
        return Err(Error::invalid("subgraph has no roots"));
    }
    let (counts, total) = server_counts(sg.unique_vertices().into_iter(), p);
    let sum: f64 = sg
        .roots
        .iter()
        .map(|&r| colocated(counts[p.home(r) as usize], counting) / total as f64)
        .sum();
    Ok(sum / sg.roots.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityConfig {
    pub servers: Vec<usize>,
    pub layers: Vec<usize>,
    pub fanout: usize,
    pub modes: Vec<SamplingMode>,
    pub partitioners: Vec<PartitionerKind>,
    /// Roots per sampled subgraph.
    pub batch: usize,
    /// Subgraphs sampled per configuration.
    pub iterations: usize,
    pub seed: u64,
    pub counting: RootCounting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityRow {
    pub servers: usize,
    pub layers: usize,
    pub mode: SamplingMode,
    pub partitioner: String,
    pub r_micro: f64,
    pub r_sub: f64,
    /// Micrographs sampled.
    pub samples: usize,
}

impl LocalityRow {
    pub fn ratio(&self) -> f64 {
        self.r_micro / self.r_sub
    }
}

pub fn partitioner_label(kind: &PartitionerKind) -> String {
    match kind {
        PartitionerKind::Hash => "hash".into(),
        PartitionerKind::Greedy { .. } => "greedy".into(),
        PartitionerKind::File(path) => format!("file:{path}"),
    }
}

pub fn mode_label(mode: SamplingMode) -> &'static str {
    match mode {
        SamplingMode::NodeWise => "node-wise",
        SamplingMode::LayerWise => "layer-wise",
    }
}

fn one_config(
    g: &Graph,
    p: &PartitionMap,
    layers: usize,
    mode: SamplingMode,
    cfg: &LocalityConfig,
) -> Result<(f64, f64, usize)> {
    let batch = cfg.batch.min(g.n_vertices());
    let sampler = SamplerConfig {
        fanouts: vec![cfg.fanout; layers],
        mode,
        seed: mix_all(cfg.seed, &[layers as u64]),
    };
    let (mut micro_sum, mut sub_sum, mut samples) = (0.0, 0.0, 0);
    for it in 0..cfg.iterations {
        let mut rng = stream(mix_all(cfg.seed, &[0x1c, layers as u64, it as u64]));
        let roots: Vec<u32> = index::sample(&mut rng, g.n_vertices(), batch)
            .into_iter()
            .map(|v| v as u32)
            .collect();
        let members = roots
            .iter()
            .map(|&r| sample_micrograph(g, r, &sampler, sampler.key(0, it as u64, r)))
            .collect::<Result<Vec<_>>>()?;
        for m in &members {
            micro_sum += r_micro_with(m, p, cfg.counting);
        }
        samples += members.len();
        let sg = Subgraph { members, roots };
        sub_sum += r_sub_with(&sg, p, cfg.counting)?;
    }
    Ok((micro_sum / samples as f64, sub_sum / cfg.iterations as f64, samples))
}

/// Monte Carlo locality statistics for every combination of partitioner,
/// sampler mode, server count and depth. Rows come out in that nesting order.
pub fn locality_report(g: &Graph, cfg: &LocalityConfig) -> Result<Vec<LocalityRow>> {
    if cfg.iterations == 0 || cfg.batch == 0 || cfg.fanout == 0 || g.n_vertices() == 0 {
        return Err(Error::invalid("locality report needs samples"));
    }
    let mut jobs = Vec::new();
    for part in &cfg.partitioners {
        for &mode in &cfg.modes {
            for &s in &cfg.servers {
                for &l in &cfg.layers {
                    jobs.push((part, mode, s, l));
                }
            }
        }
    }
    jobs.par_iter()
        .map(|&(part, mode, s, l)| {
            let p = build_partition(g, part, s, mix_all(cfg.seed, &[0x9a, s as u64]))?;
            let (r_micro, r_sub, samples) = one_config(g, &p, l, mode, cfg)?;
            Ok(LocalityRow {
                servers: s,
                layers: l,
                mode,
                partitioner: partitioner_label(part),
                r_micro,
                r_sub,
                samples,
            })
        })
        .collect()
}

pub const LOCALITY_HEADER: &str = "servers,layers,sampler,partitioner,r_micro_pct,r_sub_pct,ratio,samples";

pub fn write_locality_csv<W: Write>(rows: &[LocalityRow], mut w: W) -> Result<()> {
    writeln!(w, "{LOCALITY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{:.2},{:.2},{:.2},{}",
            r.servers,
            r.layers,
            mode_label(r.mode),
            r.partitioner,
            100.0 * r.r_micro,
            100.0 * r.r_sub,
            r.ratio(),
            r.samples
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::Block;

    fn micro(root: u32, vertices: Vec<u32>) -> Micrograph {
        Micrograph {
            root,
            layers: vec![vertices, vec![root]],
            blocks: vec![Block { pairs: vec![] }],
        }
    }

    #[test]
    fn worked_ratios() {
        let p = PartitionMap::new(vec![0, 0, 0, 1, 1, 1, 0, 1], 2).unwrap();
        let m = micro(0, vec![0, 1, 2, 3]);
        assert!((r_micro(&m, &p) - 0.75).abs() < 1e-12);
        assert!((r_micro_with(&m, &p, RootCounting::NonRoot) - 0.5).abs() < 1e-12);
        let m = micro(3, vec![3, 4, 5, 6, 0]);
        assert!((r_micro(&m, &p) - 0.6).abs() < 1e-12);
        let one = micro(2, vec![2, 0, 1]);
        assert_eq!(r_micro(&one, &p), 1.0);
    }

    #[test]
    fn single_member_subgraph_matches_micrograph() {
        let p = PartitionMap::new(vec![0, 1, 0, 1], 2).unwrap();
        let m = micro(1, vec![1, 0, 2, 3]);
        let expected = r_micro(&m, &p);
        let sg = Subgraph {
            members: vec![m],
            roots: vec![1],
        };
        assert_eq!(r_sub(&sg, &p).unwrap(), expected);
    }

    #[test]
    fn empty_subgraph_rejected() {
        let p = PartitionMap::single(2);
        let sg = Subgraph {
            members: vec![],
            roots: vec![],
        };
        assert!(r_sub(&sg, &p).is_err());
    }
}
