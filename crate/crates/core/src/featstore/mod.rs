//! Sharded vertex features, fetch accounting and pre-gathering.

pub mod ledger;
pub mod pregather;

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::graph::partition::{PartitionMap, ServerId};
use crate::graph::VertexId;
use crate::rng::{mix64, unit_f64};
use ledger::{Category, CommLedger};

/// Bytes per transported feature element.
pub const ELEM_BYTES: u64 = 4;

const FEAT_MAGIC: &[u8; 4] = b"FEAT";

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSource {
    Generated { seed: u64 },
    /// Row-major rows in vertex order, as read from a `FEAT` file.
    Rows { dim: usize, data: Vec<f32> },
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Shard {
    index: HashMap<VertexId, usize>,
    data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    dim: usize,
    shards: Vec<Shard>,
    partition: PartitionMap,
}

/// Value of element `j` of generated row `v`, in `[-1, 1)`.
pub fn generated_value(seed: u64, v: VertexId, j: usize) -> f32 {
    (unit_f64(mix64(mix64(seed, v as u64), j as u64)) * 2.0 - 1.0) as f32
}

pub fn init_features(p: &PartitionMap, dim: usize, source: FeatureSource) -> Result<FeatureStore> {
    if dim == 0 {
        return Err(Error::invalid("feature dim must be >= 1"));
    }
    let n = p.n_vertices();
    let row = |v: VertexId| -> Vec<f32> {
        match &source {
            FeatureSource::Generated { seed } => {
                (0..dim).map(|j| generated_value(*seed, v, j)).collect()
            }
            FeatureSource::Rows { data, .. } => {
                data[v as usize * dim..(v as usize + 1) * dim].to_vec()
            }
        }
    };
    if let FeatureSource::Rows { dim: file_dim, data } = &source {
        if *file_dim != dim {
            return Err(Error::Format(format!(
                "feature file has dim {file_dim}, expected {dim}"
            )));
        }
        if data.len() != n * dim {
            return Err(Error::Format(format!(
                "feature file has {} rows, graph has {n} vertices",
                data.len() / dim.max(1)
            )));
        }
    }
    let mut shards = vec![Shard::default(); p.n_servers()];
    for v in 0..n as VertexId {
        let shard = &mut shards[p.home(v) as usize];
        shard.index.insert(v, shard.data.len() / dim);
        shard.data.extend(row(v));
    }
    Ok(FeatureStore {
        dim,
        shards,
        partition: p.clone(),
    })
}

impl FeatureStore {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn partition(&self) -> &PartitionMap {
        &self.partition
    }

    pub fn row_bytes(&self) -> u64 {
        self.dim as u64 * ELEM_BYTES
    }

    /// The row as stored in its home shard.
    pub fn row(&self, v: VertexId) -> &[f32] {
        let shard = &self.shards[self.partition.home(v) as usize];
        let i = shard.index[&v];
        &shard.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Whether shard `s` holds row `v`.
    pub fn holds(&self, s: ServerId, v: VertexId) -> bool {
        self.shards[s as usize].index.contains_key(&v)
    }

    pub fn n_vertices(&self) -> usize {
        self.partition.n_vertices()
    }
}

/// Charges the ledger for reading `ids` at server `at` and returns the number
/// of remote rows. Remote rows are batched into one message per home server.
pub fn charge_fetch(
    at: ServerId,
    ids: &[VertexId],
    p: &PartitionMap,
    dim: usize,
    ledger: &mut CommLedger,
) -> u64 {
    let mut per_home: BTreeMap<ServerId, u64> = BTreeMap::new();
    let mut local = 0u64;
    for &v in ids {
        let h = p.home(v);
        if h == at {
            local += 1;
        } else {
            *per_home.entry(h).or_default() += 1;
        }
    }
    let mut remote = 0;
    for (h, count) in per_home {
        ledger.record(h, at, Category::Feature, count * dim as u64 * ELEM_BYTES);
        remote += count;
    }
    ledger.record_hits(at, local, remote);
    remote
}

/// Reads `ids` at server `at`, returning rows in input order.
pub fn fetch(
    at: ServerId,
    ids: &[VertexId],
    fs: &FeatureStore,
    ledger: &mut CommLedger,
) -> Vec<Vec<f32>> {
    charge_fetch(at, ids, &fs.partition, fs.dim, ledger);
    ids.iter().map(|&v| fs.row(v).to_vec()).collect()
}

pub fn write_feature_file<W: Write>(fs: &FeatureStore, mut w: W) -> Result<()> {
    w.write_all(FEAT_MAGIC)?;
    w.write_all(&(fs.n_vertices() as u64).to_le_bytes())?;
    w.write_all(&(fs.dim as u64).to_le_bytes())?;
    for v in 0..fs.n_vertices() as VertexId {
        for x in fs.row(v) {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Parses a `FEAT` file into a [`FeatureSource::Rows`].
pub fn read_feature_file<R: Read>(mut r: R) -> Result<FeatureSource> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("missing FEAT magic".into()))?;
    if &magic != FEAT_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)
        .map_err(|_| Error::Format("truncated FEAT header".into()))?;
    let n = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)
        .map_err(|_| Error::Format("truncated FEAT header".into()))?;
    let dim = u64::from_le_bytes(word) as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * dim * 4 {
        return Err(Error::Format(format!(
            "FEAT body has {} bytes, header says {n} x {dim}",
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(FeatureSource::Rows { dim, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_way(n: usize) -> PartitionMap {
        PartitionMap::new((0..n as u32).map(|v| v % 2).collect(), 2).unwrap()
    }

    #[test]
    fn generated_is_pure() {
        let p = two_way(3);
        let a = init_features(&p, 4, FeatureSource::Generated { seed: 3 }).unwrap();
        let b = init_features(&p, 4, FeatureSource::Generated { seed: 3 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sharding_does_not_change_rows() {
        let n = 8;
        let p2 = two_way(n);
        let p4 = PartitionMap::new((0..n as u32).map(|v| v % 4).collect(), 4).unwrap();
        let a = init_features(&p2, 6, FeatureSource::Generated { seed: 1 }).unwrap();
        let b = init_features(&p4, 6, FeatureSource::Generated { seed: 1 }).unwrap();
        assert_eq!(a.row(5), b.row(5));
        assert!(a.holds(1, 5) && !a.holds(0, 5));
    }

    #[test]
    fn file_row_count_checked() {
        let src = FeatureSource::Rows {
            dim: 2,
            data: vec![0.0; 4],
        };
        assert!(matches!(
            init_features(&PartitionMap::single(3), 2, src),
            Err(Error::Format(_))
        ));
        assert!(init_features(&PartitionMap::single(3), 0, FeatureSource::Generated { seed: 0 }).is_err());
    }

    #[test]
    fn local_fetch_is_free() {
        let p = two_way(6);
        let fs = init_features(&p, 3, FeatureSource::Generated { seed: 0 }).unwrap();
        let mut l = CommLedger::new();
        let rows = fetch(0, &[0, 2, 4], &fs, &mut l);
        assert_eq!(l.total_bytes(), 0);
        assert_eq!(l.miss_rate(), 0.0);
        assert_eq!(rows[1], fs.row(2));
    }

    #[test]
    fn remote_fetch_is_batched() {
        let p = two_way(8);
        let fs = init_features(&p, 100, FeatureSource::Generated { seed: 0 }).unwrap();
        let mut l = CommLedger::new();
        fetch(0, &[1], &fs, &mut l);
        assert_eq!(l.link(1, 0, Category::Feature).bytes, 400);
        assert_eq!(l.link(1, 0, Category::Feature).messages, 1);

        let mut l = CommLedger::new();
        let rows = fetch(0, &[3, 0, 5, 7], &fs, &mut l);
        let c = l.link(1, 0, Category::Feature);
        assert_eq!((c.messages, c.bytes), (1, 3 * 100 * 4));
        assert_eq!(rows[2], fs.row(5));
        assert_eq!(l.miss_rate(), 0.75);
    }

    #[test]
    fn feature_file_round_trip() {
        let p = two_way(5);
        let fs = init_features(&p, 3, FeatureSource::Generated { seed: 9 }).unwrap();
        let mut buf = Vec::new();
        write_feature_file(&fs, &mut buf).unwrap();
        let src = read_feature_file(&buf[..]).unwrap();
        assert_eq!(init_features(&p, 3, src).unwrap(), fs);
        assert!(read_feature_file(&buf[..buf.len() - 1]).is_err());
    }
}
