//! Small dense GNN with exact 64-bit forward and backward passes.
//!
//! Parameters live in one flat vector so gradients, accumulators and
//! synchronization work on plain slices. Per layer `k` the layout is
//! `W_k` (row-major, `rows_k x out_k`) followed by `b_k`; the classifier
//! `W_c` (`out_L x classes`, no bias) comes last.

pub mod accum;
pub mod math;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::rng::{mix64, unit_f64};

pub use accum::{accumulate, sync_and_update, GradAccumulator};
pub use math::{forward, loss_and_backward, Forward};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    /// `ReLU(mean(self ∪ neighbors) · W + b)`.
    Gcn,
    /// `ReLU([self, mean(neighbors)] · W + b)`.
    SageMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub in_dim: usize,
    pub rows: usize,
    pub out_dim: usize,
    pub w_offset: usize,
    pub b_offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub arch: Arch,
    pub n_classes: usize,
    pub layers: Vec<LayerShape>,
    pub classifier_offset: usize,
    pub params: Vec<f64>,
}

impl ModelState {
    /// Glorot-uniform weights keyed on `seed`, zero biases. Every replica
    /// built from the same arguments is bit-identical.
    pub fn init(
        arch: Arch,
        feature_dim: usize,
        hidden: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if feature_dim == 0 || hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::invalid("model needs feature dim and hidden dims >= 1"));
        }
        if n_classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        let mut layers = Vec::with_capacity(hidden.len());
        let mut offset = 0;
        let mut in_dim = feature_dim;
        for &out_dim in hidden {
            let rows = match arch {
                Arch::Gcn => in_dim,
                Arch::SageMean => 2 * in_dim,
            };
            layers.push(LayerShape {
                in_dim,
                rows,
                out_dim,
                w_offset: offset,
                b_offset: offset + rows * out_dim,
            });
            offset += rows * out_dim + out_dim;
            in_dim = out_dim;
        }
        let classifier_offset = offset;
        let total = offset + in_dim * n_classes;
        let mut params = vec![0.0; total];
        for l in &layers {
            let limit = (6.0 / (l.rows + l.out_dim) as f64).sqrt();
            fill_uniform(&mut params[l.w_offset..l.b_offset], limit, seed, l.w_offset);
        }
        let limit = (6.0 / (in_dim + n_classes) as f64).sqrt();
        fill_uniform(&mut params[classifier_offset..], limit, seed, classifier_offset);
        Ok(ModelState {
            arch,
            n_classes,
            layers,
            classifier_offset,
            params,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn param_bytes(&self) -> u64 {
        self.params.len() as u64 * crate::featstore::ELEM_BYTES
    }

    pub fn weight(&self, k: usize) -> &[f64] {
        let l = &self.layers[k];
        &self.params[l.w_offset..l.b_offset]
    }

    pub fn bias(&self, k: usize) -> &[f64] {
        let l = &self.layers[k];
        &self.params[l.b_offset..l.b_offset + l.out_dim]
    }

    pub fn classifier(&self) -> &[f64] {
        &self.params[self.classifier_offset..]
    }

    /// Text dump, one value per line with 17 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, l) in self.layers.iter().enumerate() {
            let _ = writeln!(out, "# layer {} W {} {}", k + 1, l.rows, l.out_dim);
            for x in self.weight(k) {
                let _ = writeln!(out, "{x:.16e}");
            }
            let _ = writeln!(out, "# layer {} b {}", k + 1, l.out_dim);
            for x in self.bias(k) {
                let _ = writeln!(out, "{x:.16e}");
            }
        }
        let _ = writeln!(out, "# classifier W {} {}", self.output_dim(), self.n_classes);
        for x in self.classifier() {
            let _ = writeln!(out, "{x:.16e}");
        }
        out
    }
}

fn fill_uniform(dst: &mut [f64], limit: f64, seed: u64, base: usize) {
    for (i, x) in dst.iter_mut().enumerate() {
        *x = (unit_f64(mix64(seed, (base + i) as u64)) * 2.0 - 1.0) * limit;
    }
}

/// Deterministic vertex labels in `[0, classes)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelOracle {
    pub n_classes: usize,
    pub seed: u64,
}

impl LabelOracle {
    pub fn new(n_classes: usize, seed: u64) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        Ok(Self { n_classes, seed })
    }

    pub fn label(&self, v: VertexId) -> usize {
        (mix64(self.seed ^ 0x1abe1, v as u64) % self.n_classes as u64) as usize
    }
}
