//! Greedy micrograph merging driven by simulated epoch time.

use super::config::Strategy;
use super::metrics::EpochMetrics;
use super::sim::{Cluster, Trainer};
use super::trace::find_fewest_column;
use crate::error::{Error, Result};
use crate::gnn::ModelState;
use crate::sampler::redistribute_roots;

/// One tentative column removal.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTrial {
    /// Epoch at which the tentative table started running.
    pub epoch: usize,
    pub removed_step: usize,
    pub baseline_seconds: f64,
    pub trial_seconds: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct MergeStudy {
    pub trials: Vec<MergeTrial>,
    /// Columns in use during each epoch.
    pub columns_per_epoch: Vec<usize>,
    /// Column count after each decision, starting from `N`.
    pub accepted_columns: Vec<usize>,
    pub epochs: Vec<EpochMetrics>,
    /// Removed original step ids of the final table, in removal order.
    pub pattern: Vec<usize>,
    /// Model 0 after the last epoch.
    pub final_model: ModelState,
}

/// Checks bijection and row-sum conservation of every iteration table of
/// `epoch` under `pattern`.
pub fn check_pattern(cluster: &Cluster, epoch: usize, pattern: &[usize]) -> Result<()> {
    for (it, batches) in cluster.epoch_batches(epoch).iter().enumerate() {
        let plan = redistribute_roots(batches, &cluster.partition);
        let tt = cluster.iteration_table(epoch, it, &plan, pattern)?;
        tt.check_bijection()?;
        let expected: Vec<usize> = batches.iter().map(Vec::len).collect();
        if tt.row_sums() != expected {
            return Err(Error::Invariant(format!(
                "row sums {:?} differ from batch sizes {:?}",
                tt.row_sums(),
                expected
            )));
        }
    }
    Ok(())
}

/// Runs `epochs` epochs of hopgnn with the merge controller. Epoch 0 uses the
/// unmerged table. From epoch 1 the current table is measured over `k`
/// epochs, then the fewest-root column is tentatively removed and measured
/// over `k` more; the removal is kept only if the average simulated time is
/// strictly lower. The first rejection, a single remaining column or running
/// out of epochs ends the search and later epochs reuse the accepted table.
pub fn merge_controller(
    cluster: &Cluster,
    pregather: bool,
    epochs: usize,
    k: usize,
) -> Result<MergeStudy> {
    if k == 0 {
        return Err(Error::invalid("K must be >= 1"));
    }
    let strategy = Strategy::HopGnn {
        pregather,
        merge: true,
    };
    let n = cluster.n_servers();
    let mut trainer = Trainer::new(cluster);
    let mut study = MergeStudy {
        trials: Vec::new(),
        columns_per_epoch: Vec::new(),
        accepted_columns: vec![n],
        epochs: Vec::new(),
        pattern: Vec::new(),
        final_model: cluster.initial_model.clone(),
    };
    let mut epoch = 0;

    let run = |trainer: &mut Trainer, study: &mut MergeStudy, epoch: &mut usize, pattern: &[usize]| -> Result<f64> {
        check_pattern(cluster, *epoch, pattern)?;
        let out = trainer.run_epoch(strategy, *epoch, pattern)?;
        study.columns_per_epoch.push(n - pattern.len());
        let secs = out.metrics.sim_seconds;
        study.epochs.push(out.metrics);
        *epoch += 1;
        Ok(secs)
    };

    if epochs > 0 {
        run(&mut trainer, &mut study, &mut epoch, &[])?;
    }
    let mut searching = true;
    let mut baseline: Option<f64> = None;
    while epoch < epochs {
        let pattern = study.pattern.clone();
        if !searching || n - pattern.len() < 2 {
            searching = false;
            run(&mut trainer, &mut study, &mut epoch, &pattern)?;
            continue;
        }
        let base = match baseline {
            Some(b) => b,
            None => {
                let mut total = 0.0;
                let mut done = 0;
                while done < k && epoch < epochs {
                    total += run(&mut trainer, &mut study, &mut epoch, &pattern)?;
                    done += 1;
                }
                if done < k {
                    break;
                }
                let b = total / k as f64;
                baseline = Some(b);
                continue;
            }
        };
        if epochs - epoch < k {
            searching = false;
            continue;
        }
        let sums = cluster.epoch_column_sums(epoch, &pattern)?;
        let col = find_fewest_column(&sums).expect("at least two columns");
        let survivors: Vec<usize> = (0..n).filter(|s| !pattern.contains(s)).collect();
        let step = survivors[col];
        let mut candidate = pattern.clone();
        candidate.push(step);
        let start = epoch;
        let mut total = 0.0;
        for _ in 0..k {
            total += run(&mut trainer, &mut study, &mut epoch, &candidate)?;
        }
        let trial = total / k as f64;
        let accepted = trial < base;
        study.trials.push(MergeTrial {
            epoch: start,
            removed_step: step,
            baseline_seconds: base,
            trial_seconds: trial,
            accepted,
        });
        if accepted {
            study.pattern = candidate;
            baseline = Some(trial);
        } else {
            searching = false;
        }
        study.accepted_columns.push(n - study.pattern.len());
    }
    study.final_model = trainer.models()[0].clone();
    Ok(study)
}
