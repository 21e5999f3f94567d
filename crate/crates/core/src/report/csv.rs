use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::engine::metrics::EpochMetrics;
use crate::error::Result;
use crate::featstore::ledger::Category;

pub const METRICS_HEADER: &str = "epoch,strategy,sim_seconds,steps,feature_bytes,model_bytes,gradient_bytes,intermediate_bytes,topology_bytes,miss_rate,alpha,imbalance";

/// One results row. Floats are written in shortest round-trip form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: usize,
    pub strategy: String,
    pub sim_seconds: f64,
    pub steps: usize,
    pub feature_bytes: u64,
    pub model_bytes: u64,
    pub gradient_bytes: u64,
    pub intermediate_bytes: u64,
    pub topology_bytes: u64,
    pub miss_rate: f64,
    pub alpha: f64,
    pub imbalance: f64,
}

impl From<&EpochMetrics> for MetricsRow {
    fn from(m: &EpochMetrics) -> Self {
        Self {
            epoch: m.epoch,
            strategy: m.strategy.clone(),
            sim_seconds: m.sim_seconds,
            steps: m.steps,
            feature_bytes: m.bytes(Category::Feature),
            model_bytes: m.bytes(Category::Model),
            gradient_bytes: m.bytes(Category::Gradient),
            intermediate_bytes: m.bytes(Category::Intermediate),
            topology_bytes: m.bytes(Category::Topology),
            miss_rate: m.miss_rate,
            alpha: m.alpha,
            imbalance: m.imbalance,
        }
    }
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], w: W) -> Result<()> {
    let mut wr = ::csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(METRICS_HEADER.split(','))?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(r: R) -> Result<Vec<MetricsRow>> {
    let mut rd = ::csv::Reader::from_reader(r);
    let rows = rd.deserialize().collect::<std::result::Result<Vec<MetricsRow>, _>>()?;
    Ok(rows)
}
