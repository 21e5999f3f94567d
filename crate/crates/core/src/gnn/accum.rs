//! Gradient accumulation and synchronous parameter update.

use super::ModelState;
use crate::error::{Error, Result};
use crate::featstore::ledger::{Category, CommLedger};
use crate::featstore::ELEM_BYTES;
use crate::graph::partition::ServerId;

/// Gradient sum owned by one logical model; travels with it between servers.
#[derive(Debug, Clone, PartialEq)]
pub struct GradAccumulator {
    pub model: usize,
    pub sum: Vec<f64>,
    pub count: usize,
}

impl GradAccumulator {
    pub fn new(model: usize, param_count: usize) -> Self {
        Self {
            model,
            sum: vec![0.0; param_count],
            count: 0,
        }
    }

    pub fn reset(&mut self) {
        self.sum.iter_mut().for_each(|x| *x = 0.0);
        self.count = 0;
    }
}

pub fn accumulate(acc: &mut GradAccumulator, g: &[f64]) -> Result<()> {
    if g.len() != acc.sum.len() {
        return Err(Error::ShapeMismatch {
            expected: acc.sum.len(),
            got: g.len(),
        });
    }
    for (a, &x) in acc.sum.iter_mut().zip(g) {
        *a += x;
    }
    acc.count += 1;
    Ok(())
}

/// Averages the accumulated gradients over the global batch and applies one
/// SGD step to every replica. Accumulators are reset. Returns the global
/// gradient.
pub fn sync_and_update(
    models: &mut [ModelState],
    accs: &mut [GradAccumulator],
    batch_total: usize,
    lr: f64,
) -> Result<Vec<f64>> {
    let Some(first) = models.first() else {
        return Ok(Vec::new());
    };
    let p = first.param_count();
    if models.iter().any(|m| m.params != first.params) {
        return Err(Error::Invariant(
            "model replicas diverged before synchronization".into(),
        ));
    }
    let mut global = vec![0.0; p];
    for acc in accs.iter() {
        if acc.sum.len() != p {
            return Err(Error::ShapeMismatch {
                expected: p,
                got: acc.sum.len(),
            });
        }
        for (g, &x) in global.iter_mut().zip(&acc.sum) {
            *g += x;
        }
    }
    if batch_total > 0 {
        let scale = 1.0 / batch_total as f64;
        global.iter_mut().for_each(|g| *g *= scale);
        for m in models.iter_mut() {
            for (w, &g) in m.params.iter_mut().zip(&global) {
                *w -= lr * g;
            }
        }
    }
    accs.iter_mut().for_each(GradAccumulator::reset);
    Ok(global)
}

/// Element counts of the `n` ring chunks, as even as possible.
fn ring_chunks(n: usize, param_count: usize) -> Vec<usize> {
    (0..n)
        .map(|i| param_count / n + usize::from(i < param_count % n))
        .collect()
}

/// Charges a ring all-reduce of `param_count` 4-byte elements over `n`
/// servers: `n - 1` reduce-scatter and `n - 1` all-gather rounds, each server
/// sending one chunk to its successor per round.
pub fn charge_ring_allreduce(ledger: &mut CommLedger, n: usize, param_count: usize) {
    if n < 2 {
        return;
    }
    let chunks = ring_chunks(n, param_count);
    for round in 0..2 * (n - 1) {
        for s in 0..n {
            let chunk = if round < n - 1 {
                (s + n - round) % n
            } else {
                (s + 1 + n - (round - (n - 1))) % n
            };
            let bytes = chunks[chunk] as u64 * ELEM_BYTES;
            ledger.record(s as ServerId, ((s + 1) % n) as ServerId, Category::Gradient, bytes);
        }
    }
}
