//! `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are errors. List
//! values are comma separated. Every seed defaults to a value derived from
//! `seed`, so overriding `seed` alone reseeds the whole experiment.

use std::fmt;
use std::str::FromStr;

use super::cost::CostModel;
use crate::error::{Error, Result};
use crate::gnn::Arch;
use crate::rng::mix64;
use crate::sampler::SamplingMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    ModelCentric,
    Naive,
    LocalityOptimized,
    HopGnn { pregather: bool, merge: bool },
}

impl Strategy {
    /// The six variants compared by `compare`, in output order.
    pub const COMPARED: [Strategy; 6] = [
        Strategy::ModelCentric,
        Strategy::Naive,
        Strategy::LocalityOptimized,
        Strategy::HopGnn {
            pregather: false,
            merge: false,
        },
        Strategy::HopGnn {
            pregather: true,
            merge: false,
        },
        Strategy::HopGnn {
            pregather: true,
            merge: true,
        },
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::ModelCentric => "model-centric",
            Strategy::Naive => "naive",
            Strategy::LocalityOptimized => "locality-optimized",
            Strategy::HopGnn {
                pregather: false,
                merge: false,
            } => "hopgnn",
            Strategy::HopGnn {
                pregather: true,
                merge: false,
            } => "hopgnn+pg",
            Strategy::HopGnn {
                pregather: false,
                merge: true,
            } => "hopgnn+merge",
            Strategy::HopGnn {
                pregather: true,
                merge: true,
            } => "hopgnn+pg+merge",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = Strategy::COMPARED.into_iter().chain([Strategy::HopGnn {
            pregather: false,
            merge: true,
        }]);
        for st in all {
            if st.label() == s {
                return Ok(st);
            }
        }
        Err(Error::Config(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Sbm { blocks: Vec<usize>, p_in: f64, p_out: f64 },
    EdgeList(String),
    CsrBinary(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionerKind {
    Hash,
    Greedy { slack: f64 },
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub graph: GraphSource,
    pub partitioner: PartitionerKind,
    pub servers: usize,
    pub fanouts: Vec<usize>,
    pub sampling: SamplingMode,
    pub dim: usize,
    pub feature_file: Option<String>,
    pub hidden: Vec<usize>,
    pub classes: usize,
    pub arch: Arch,
    pub strategy: Strategy,
    pub epochs: usize,
    /// Iterations per epoch; `None` uses every full global batch.
    pub iterations: Option<usize>,
    pub batch: usize,
    pub lr: f64,
    pub k: usize,
    pub cost: CostModel,
    pub seed: u64,
    pub graph_seed: Option<u64>,
    pub partition_seed: Option<u64>,
    pub sampler_seed: Option<u64>,
    pub feature_seed: Option<u64>,
    pub label_seed: Option<u64>,
    pub model_seed: Option<u64>,
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            graph: GraphSource::Sbm {
                blocks: vec![100, 100],
                p_in: 0.2,
                p_out: 0.01,
            },
            partitioner: PartitionerKind::Greedy { slack: 0.05 },
            servers: 4,
            fanouts: vec![3, 3],
            sampling: SamplingMode::NodeWise,
            dim: 8,
            feature_file: None,
            hidden: vec![8, 8],
            classes: 4,
            arch: Arch::Gcn,
            strategy: Strategy::HopGnn {
                pregather: true,
                merge: false,
            },
            epochs: 1,
            iterations: None,
            batch: 32,
            lr: 0.1,
            k: 1,
            cost: CostModel::default(),
            seed: 1,
            graph_seed: None,
            partition_seed: None,
            sampler_seed: None,
            feature_seed: None,
            label_seed: None,
            model_seed: None,
            parallel: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|t| parse_num(key, t.trim())).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => parse_num(key, v),
    }
}

impl TrainConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        let mut graph_kind = String::from("sbm");
        let mut graph_path: Option<String> = None;
        let (mut blocks, mut p_in, mut p_out) = (vec![100usize, 100], 0.2, 0.01);
        let mut partitioner = String::from("greedy");
        let mut partition_file: Option<String> = None;
        let mut slack = 0.05;
        let mut layers: Option<usize> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", idx + 1))
            })?;
            let (key, v) = (key.trim(), value.trim());
            match key {
                "graph" => graph_kind = v.to_string(),
                "graph_path" | "edge_list" => graph_path = Some(v.to_string()),
                "sbm_blocks" => blocks = parse_list(key, v)?,
                "p_in" => p_in = parse_num(key, v)?,
                "p_out" => p_out = parse_num(key, v)?,
                "partitioner" => partitioner = v.to_string(),
                "partition_file" => partition_file = Some(v.to_string()),
                "slack" => slack = parse_num(key, v)?,
                "servers" => cfg.servers = parse_num(key, v)?,
                "layers" => layers = Some(parse_num(key, v)?),
                "fanouts" | "fanout" => cfg.fanouts = parse_list(key, v)?,
                "sampler" => {
                    cfg.sampling = match v {
                        "node" | "node-wise" => SamplingMode::NodeWise,
                        "layer" | "layer-wise" => SamplingMode::LayerWise,
                        _ => return Err(Error::Config(format!("sampler: unknown mode {v:?}"))),
                    }
                }
                "dim" => cfg.dim = parse_num(key, v)?,
                "feature_file" => cfg.feature_file = Some(v.to_string()),
                "hidden" => cfg.hidden = parse_list(key, v)?,
                "classes" => cfg.classes = parse_num(key, v)?,
                "arch" => {
                    cfg.arch = match v {
                        "gcn" => Arch::Gcn,
                        "sage" | "sage-mean" => Arch::SageMean,
                        _ => return Err(Error::Config(format!("arch: unknown {v:?}"))),
                    }
                }
                "strategy" => cfg.strategy = v.parse()?,
                "epochs" => cfg.epochs = parse_num(key, v)?,
                "iterations" => cfg.iterations = Some(parse_num(key, v)?),
                "batch" => cfg.batch = parse_num(key, v)?,
                "lr" => cfg.lr = parse_num(key, v)?,
                "k" | "K" => cfg.k = parse_num(key, v)?,
                "bandwidth" => cfg.cost.bandwidth = parse_f64(key, v)?,
                "latency" => cfg.cost.latency = parse_f64(key, v)?,
                "sync_overhead" => cfg.cost.sync_overhead = parse_f64(key, v)?,
                "kernel_launch" => cfg.cost.kernel_launch = parse_f64(key, v)?,
                "compute_rate" => cfg.cost.compute_rate = parse_f64(key, v)?,
                "seed" => cfg.seed = parse_num(key, v)?,
                "graph_seed" => cfg.graph_seed = Some(parse_num(key, v)?),
                "partition_seed" => cfg.partition_seed = Some(parse_num(key, v)?),
                "sampler_seed" => cfg.sampler_seed = Some(parse_num(key, v)?),
                "feature_seed" => cfg.feature_seed = Some(parse_num(key, v)?),
                "label_seed" => cfg.label_seed = Some(parse_num(key, v)?),
                "model_seed" => cfg.model_seed = Some(parse_num(key, v)?),
                "parallel" => cfg.parallel = parse_bool(key, v)?,
                _ => return Err(Error::Config(format!("unknown key {key:?}"))),
            }
        }

        cfg.graph = match graph_kind.as_str() {
            "sbm" => GraphSource::Sbm {
                blocks,
                p_in,
                p_out,
            },
            "edges" | "edge_list" | "file" => GraphSource::EdgeList(
                graph_path.ok_or_else(|| Error::Config("graph_path required".into()))?,
            ),
            "csr" => GraphSource::CsrBinary(
                graph_path.ok_or_else(|| Error::Config("graph_path required".into()))?,
            ),
            other => return Err(Error::Config(format!("graph: unknown source {other:?}"))),
        };
        cfg.partitioner = match partitioner.as_str() {
            "hash" => PartitionerKind::Hash,
            "greedy" => PartitionerKind::Greedy { slack },
            "file" => PartitionerKind::File(
                partition_file.ok_or_else(|| Error::Config("partition_file required".into()))?,
            ),
            other => return Err(Error::Config(format!("partitioner: unknown {other:?}"))),
        };
        if let Some(l) = layers {
            if cfg.fanouts.len() == 1 {
                cfg.fanouts = vec![cfg.fanouts[0]; l];
            }
            if cfg.hidden.len() == 1 {
                cfg.hidden = vec![cfg.hidden[0]; l];
            }
        } else if cfg.hidden.len() == 1 && cfg.fanouts.len() > 1 {
            cfg.hidden = vec![cfg.hidden[0]; cfg.fanouts.len()];
        } else if cfg.fanouts.len() == 1 && cfg.hidden.len() > 1 {
            cfg.fanouts = vec![cfg.fanouts[0]; cfg.hidden.len()];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.servers == 0 {
            return bad("servers must be >= 1");
        }
        if self.fanouts.is_empty() || self.fanouts.contains(&0) {
            return bad("fanouts must be >= 1");
        }
        if self.hidden.len() != self.fanouts.len() {
            return bad("hidden and fanouts must have one entry per layer");
        }
        if self.hidden.contains(&0) || self.dim == 0 {
            return bad("dims must be >= 1");
        }
        if self.classes < 2 {
            return bad("classes must be >= 2");
        }
        if self.batch == 0 || self.k == 0 {
            return bad("batch and K must be >= 1");
        }
        if !(self.lr.is_finite()) {
            return bad("lr must be finite");
        }
        if let PartitionerKind::Greedy { slack } = self.partitioner {
            if slack.is_nan() || slack < 0.0 {
                return bad("slack must be >= 0");
            }
        }
        self.cost
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn n_layers(&self) -> usize {
        self.fanouts.len()
    }

    fn derived(&self, explicit: Option<u64>, tag: u64) -> u64 {
        explicit.unwrap_or_else(|| mix64(self.seed, tag))
    }

    pub fn graph_seed(&self) -> u64 {
        self.derived(self.graph_seed, 1)
    }
    pub fn partition_seed(&self) -> u64 {
        self.derived(self.partition_seed, 2)
    }
    pub fn sampler_seed(&self) -> u64 {
        self.derived(self.sampler_seed, 3)
    }
    pub fn feature_seed(&self) -> u64 {
        self.derived(self.feature_seed, 4)
    }
    pub fn label_seed(&self) -> u64 {
        self.derived(self.label_seed, 5)
    }
    pub fn model_seed(&self) -> u64 {
        self.derived(self.model_seed, 6)
    }
    /// Seed for mini-batch shuffling and merge redistribution.
    pub fn batch_seed(&self) -> u64 {
        mix64(self.seed, 7)
    }
}
