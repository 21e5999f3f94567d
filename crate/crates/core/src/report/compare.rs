use rayon::prelude::*;

use crate::engine::config::{Strategy, TrainConfig};
use crate::engine::merge::merge_controller;
use crate::engine::metrics::EpochMetrics;
use crate::engine::sim::{Cluster, Trainer};
use crate::error::Result;

/// Runs `strategy` for `epochs` epochs from the cluster's initial model.
pub fn run_strategy(cluster: &Cluster, strategy: Strategy, epochs: usize, k: usize) -> Result<Vec<EpochMetrics>> {
    if let Strategy::HopGnn {
        pregather,
        merge: true,
    } = strategy
    {
        return Ok(merge_controller(cluster, pregather, epochs, k)?.epochs);
    }
    let mut trainer = Trainer::new(cluster);
    (0..epochs)
        .map(|e| trainer.run_epoch(strategy, e, &[]).map(|o| o.metrics))
        .collect()
}

/// Per-epoch metrics of every compared strategy, strategies in fixed order.
pub fn compare_strategies(cfg: &TrainConfig) -> Result<Vec<EpochMetrics>> {
    let cluster = Cluster::from_config(cfg)?;
    let run = |&s: &Strategy| run_strategy(&cluster, s, cfg.epochs, cfg.k);
    let per: Vec<Vec<EpochMetrics>> = if cfg.parallel {
        Strategy::COMPARED.par_iter().map(run).collect::<Result<_>>()?
    } else {
        Strategy::COMPARED.iter().map(run).collect::<Result<_>>()?
    };
    Ok(per.into_iter().flatten().collect())
}
