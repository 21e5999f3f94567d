//! Forward and backward passes over one micrograph.

use super::{Arch, ModelState};
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::sampler::Micrograph;

/// Everything the backward pass needs from the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// `h[k]`: activations of layer `k`, row-major; `h[0]` are input features.
    pub h: Vec<Vec<f64>>,
    /// `agg[k - 1]`: aggregated inputs of layer `k` (`rows_k` wide).
    pub agg: Vec<Vec<f64>>,
    /// `pre[k - 1]`: pre-activations of layer `k`.
    pub pre: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

/// Runs the micrograph forward. `row` must return the feature row of every
/// layer-0 vertex.
pub fn forward<'a, F>(m: &Micrograph, row: F, model: &ModelState) -> Result<Forward>
where
    F: Fn(VertexId) -> Option<&'a [f32]>,
{
    let n_layers = model.n_layers();
    if m.n_layers() != n_layers {
        return Err(Error::invalid(format!(
            "micrograph has {} layers, model has {n_layers}",
            m.n_layers()
        )));
    }
    let dim = model.feature_dim();
    let mut h0 = Vec::with_capacity(m.layers[0].len() * dim);
    for &v in &m.layers[0] {
        let r = row(v).ok_or_else(|| {
            Error::Invariant(format!("missing feature row for vertex {v}"))
        })?;
        if r.len() != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                got: r.len(),
            });
        }
        h0.extend(r.iter().map(|&x| x as f64));
    }

    let mut h = vec![h0];
    let mut agg = Vec::with_capacity(n_layers);
    let mut pre = Vec::with_capacity(n_layers);
    for k in 1..=n_layers {
        let shape = model.layers[k - 1];
        let n_dst = m.layers[k].len();
        let prev = &h[k - 1];
        let in_dim = shape.in_dim;
        let sources = m.sources(k);
        let mut a = vec![0.0; n_dst * shape.rows];
        for i in 0..n_dst {
            let out = &mut a[i * shape.rows..(i + 1) * shape.rows];
            let self_row = &prev[i * in_dim..(i + 1) * in_dim];
            match model.arch {
                Arch::Gcn => {
                    let denom = (sources[i].len() + 1) as f64;
                    for (o, &x) in out.iter_mut().zip(self_row) {
                        *o = x;
                    }
                    for &s in &sources[i] {
                        let src = &prev[s as usize * in_dim..(s as usize + 1) * in_dim];
                        for (o, &x) in out.iter_mut().zip(src) {
                            *o += x;
                        }
                    }
                    out.iter_mut().for_each(|o| *o /= denom);
                }
                Arch::SageMean => {
                    let (own, nbr) = out.split_at_mut(in_dim);
                    own.copy_from_slice(self_row);
                    if sources[i].is_empty() {
                        nbr.copy_from_slice(self_row);
                    } else {
                        for &s in &sources[i] {
                            let src = &prev[s as usize * in_dim..(s as usize + 1) * in_dim];
                            for (o, &x) in nbr.iter_mut().zip(src) {
                                *o += x;
                            }
                        }
                        let denom = sources[i].len() as f64;
                        nbr.iter_mut().for_each(|o| *o /= denom);
                    }
                }
            }
        }
        let w = model.weight(k - 1);
        let b = model.bias(k - 1);
        let out_dim = shape.out_dim;
        let mut z = vec![0.0; n_dst * out_dim];
        for i in 0..n_dst {
            let zi = &mut z[i * out_dim..(i + 1) * out_dim];
            zi.copy_from_slice(b);
            for (r, &x) in a[i * shape.rows..(i + 1) * shape.rows].iter().enumerate() {
                if x != 0.0 {
                    let wr = &w[r * out_dim..(r + 1) * out_dim];
                    for (zj, &wj) in zi.iter_mut().zip(wr) {
                        *zj += x * wj;
                    }
                }
            }
        }
        let hk = z.iter().map(|&x| x.max(0.0)).collect();
        agg.push(a);
        pre.push(z);
        h.push(hk);
    }

    let root_h = &h[n_layers];
    let wc = model.classifier();
    let c = model.n_classes;
    let mut logits = vec![0.0; c];
    for (r, &x) in root_h.iter().enumerate() {
        for (l, &w) in logits.iter_mut().zip(&wc[r * c..(r + 1) * c]) {
            *l += x * w;
        }
    }
    Ok(Forward {
        h,
        agg,
        pre,
        logits,
    })
}

/// Softmax cross-entropy of the root, `logsumexp(logits) - logits[label]`.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Returns the root loss and its unscaled gradient with respect to every
/// parameter, in the model's flat layout.
pub fn loss_and_backward(
    m: &Micrograph,
    fwd: &Forward,
    label: usize,
    model: &ModelState,
) -> (f64, Vec<f64>) {
    let loss = cross_entropy(&fwd.logits, label);
    let mut grad = vec![0.0; model.param_count()];
    let c = model.n_classes;
    let n_layers = model.n_layers();

    let max = fwd.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = fwd.logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let mut dlogits: Vec<f64> = exps.iter().map(|&e| e / sum).collect();
    dlogits[label] -= 1.0;

    let root_h = &fwd.h[n_layers];
    let wc = model.classifier();
    let gc = &mut grad[model.classifier_offset..];
    let mut dh = vec![0.0; root_h.len()];
    for (r, &x) in root_h.iter().enumerate() {
        for j in 0..c {
            gc[r * c + j] = x * dlogits[j];
            dh[r] += wc[r * c + j] * dlogits[j];
        }
    }

    for k in (1..=n_layers).rev() {
        let shape = model.layers[k - 1];
        let out_dim = shape.out_dim;
        let rows = shape.rows;
        let n_dst = m.layers[k].len();
        let z = &fwd.pre[k - 1];
        let a = &fwd.agg[k - 1];
        let dz: Vec<f64> = dh
            .iter()
            .zip(z)
            .map(|(&g, &zz)| if zz > 0.0 { g } else { 0.0 })
            .collect();

        let (gw, gb) = {
            let (head, tail) = grad.split_at_mut(shape.b_offset);
            (&mut head[shape.w_offset..], &mut tail[..out_dim])
        };
        for i in 0..n_dst {
            let dzi = &dz[i * out_dim..(i + 1) * out_dim];
            for (b, &d) in gb.iter_mut().zip(dzi) {
                *b += d;
            }
            for (r, &x) in a[i * rows..(i + 1) * rows].iter().enumerate() {
                if x != 0.0 {
                    for (g, &d) in gw[r * out_dim..(r + 1) * out_dim].iter_mut().zip(dzi) {
                        *g += x * d;
                    }
                }
            }
        }
        if k == 1 {
            break;
        }

        let w = model.weight(k - 1);
        let mut da = vec![0.0; n_dst * rows];
        for i in 0..n_dst {
            let dzi = &dz[i * out_dim..(i + 1) * out_dim];
            for r in 0..rows {
                let wr = &w[r * out_dim..(r + 1) * out_dim];
                da[i * rows + r] = wr.iter().zip(dzi).map(|(&w, &d)| w * d).sum();
            }
        }

        let in_dim = shape.in_dim;
        let sources = m.sources(k);
        let mut dprev = vec![0.0; m.layers[k - 1].len() * in_dim];
        for i in 0..n_dst {
            let dai = &da[i * rows..(i + 1) * rows];
            match model.arch {
                Arch::Gcn => {
                    let scale = 1.0 / (sources[i].len() + 1) as f64;
                    for t in std::iter::once(i as u32).chain(sources[i].iter().copied()) {
                        let dst = &mut dprev[t as usize * in_dim..(t as usize + 1) * in_dim];
                        for (d, &g) in dst.iter_mut().zip(dai) {
                            *d += g * scale;
                        }
                    }
                }
                Arch::SageMean => {
                    let (own, nbr) = dai.split_at(in_dim);
                    let dst = &mut dprev[i * in_dim..(i + 1) * in_dim];
                    for (d, &g) in dst.iter_mut().zip(own) {
                        *d += g;
                    }
                    if sources[i].is_empty() {
                        for (d, &g) in dst.iter_mut().zip(nbr) {
                            *d += g;
                        }
                    } else {
                        let scale = 1.0 / sources[i].len() as f64;
                        for &s in &sources[i] {
                            let dst = &mut dprev[s as usize * in_dim..(s as usize + 1) * in_dim];
                            for (d, &g) in dst.iter_mut().zip(nbr) {
                                *d += g * scale;
                            }
                        }
                    }
                }
            }
        }
        dh = dprev;
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::Block;

    fn edge_micrograph() -> Micrograph {
        // root 0 <- 1
        Micrograph {
            root: 0,
            layers: vec![vec![0, 1], vec![0]],
            blocks: vec![Block {
                pairs: vec![(0, 1)],
            }],
        }
    }

    #[test]
    fn identity_weights_give_mean() {
        let mut model = ModelState::init(Arch::Gcn, 2, &[2], 2, 0).unwrap();
        let w0 = model.layers[0].w_offset;
        model.params[w0..w0 + 4].copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        let feats = [[1.0f32, -4.0], [3.0, 2.0]];
        let fwd = forward(&edge_micrograph(), |v| Some(&feats[v as usize][..]), &model).unwrap();
        // ReLU(mean([1, -4], [3, 2])) = ReLU([2, -1])
        assert_eq!(fwd.h[1], vec![2.0, 0.0]);
    }

    #[test]
    fn zero_weights_give_uniform_loss() {
        let mut model = ModelState::init(Arch::SageMean, 2, &[3], 4, 0).unwrap();
        model.params.iter_mut().for_each(|p| *p = 0.0);
        let feats = [[1.0f32, 1.0], [2.0, 2.0]];
        let m = edge_micrograph();
        let fwd = forward(&m, |v| Some(&feats[v as usize][..]), &model).unwrap();
        assert!(fwd.logits.iter().all(|&l| l == 0.0));
        let (loss, _) = loss_and_backward(&m, &fwd, 1, &model);
        assert!((loss - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn confident_prediction_has_no_gradient() {
        let mut model = ModelState::init(Arch::Gcn, 1, &[1], 2, 0).unwrap();
        // h = ReLU(x * 1 + 0) = 1, logits = [1000, -1000]
        let l = model.layers[0];
        model.params[l.w_offset] = 1.0;
        let cls = model.classifier_offset;
        model.params[cls] = 1000.0;
        model.params[cls + 1] = -1000.0;
        let m = Micrograph {
            root: 0,
            layers: vec![vec![0], vec![0]],
            blocks: vec![Block::default()],
        };
        let feats = [[1.0f32]];
        let fwd = forward(&m, |v| Some(&feats[v as usize][..]), &model).unwrap();
        let (loss, grad) = loss_and_backward(&m, &fwd, 0, &model);
        assert!(loss < 1e-12);
        assert!(grad.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn missing_row_is_an_error() {
        let model = ModelState::init(Arch::Gcn, 1, &[1], 2, 0).unwrap();
        let feats = [[1.0f32]];
        let r = forward(&edge_micrograph(), |v| feats.get(v as usize).map(|r| &r[..]), &model);
        assert!(matches!(r, Err(Error::Invariant(_))));
    }
}
