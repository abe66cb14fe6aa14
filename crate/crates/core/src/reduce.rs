//   Copyright 2026 hzreach developers
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.


//! Error-bounded neuron removal.
//!
//! A hidden neuron `j` is scored by `h_j = (Σ_i |W_next[i, j]|)·(β_j − α_j)`,
//! the total width it contributes to the next layer over its output range.
//! Neurons with `h_j ≤ ρ` are removed and their contribution is folded into
//! the next layer's bias as an interval, so the reduced network's set-valued
//! map contains the original map.

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundMethod, BoundPropagator};
use crate::error::{Error, Result};
use crate::interval::IntervalVector;
use crate::model::{Dense, Layer, Network};
use crate::sparse;
use crate::sparse::SparseMatrix;

/// How the removal threshold is chosen per layer.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum RhoPolicy {
    /// No neuron is removed, not even one with zero score.
    #[default]
    Disabled,
    Fixed(f64),
    /// Nearest-rank quantile of the layer's scores, `q ∈ [0, 1]`.
    Quantile(f64),
}

impl RhoPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RhoPolicy::Disabled => Ok(()),
            RhoPolicy::Fixed(r) if r >= 0.0 && !r.is_nan() => Ok(()),
            RhoPolicy::Quantile(q) if (0.0..=1.0).contains(&q) => Ok(()),
            other => Err(Error::InvalidArgument(format!("invalid reduction threshold {other:?}"))),
        }
    }

    /// Threshold for a layer with the given scores. `None` disables removal.
    pub fn resolve(&self, scores: &[f64]) -> Option<f64> {
        match *self {
            RhoPolicy::Disabled => None,
            RhoPolicy::Fixed(r) => Some(r),
            RhoPolicy::Quantile(q) => {
                if scores.is_empty() {
                    return None;
                }
                let mut s = scores.to_vec();
                s.sort_by(f64::total_cmp);
                let rank = ((q * s.len() as f64).ceil() as usize).clamp(1, s.len());
                Some(s[rank - 1])
            }
        }
    }
}

/// `h = colAbsSum(W_next) ⊙ (β − α)`.
pub fn neuron_scores(w_next: &SparseMatrix, post: &IntervalVector) -> Result<Vec<f64>> {
    if w_next.cols() != post.len() {
        return Err(Error::dims("score bounds", w_next.cols(), post.len()));
    }
    Ok(sparse::col_abs_sums(w_next)
        .iter()
        .zip(post.widths())
        .map(|(c, d)| c * d)
        .collect())
}

/// Indices with score `≤ rho`, ascending.
pub fn select_neurons(w_next: &SparseMatrix, post: &IntervalVector, rho: f64) -> Result<Vec<usize>> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::InvalidArgument(format!("threshold must be nonnegative, got {rho}")));
    }
    Ok(neuron_scores(w_next, post)?
        .iter()
        .enumerate()
        .filter(|(_, &h)| h <= rho)
        .map(|(j, _)| j)
        .collect())
}

/// Sum of interval widths.
pub fn error_size(e: &IntervalVector) -> f64 {
    e.size()
}

/// A layer pair after removing neurons of the first layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSurgery {
    pub layer: Dense,
    pub next: Dense,
    pub kept: Vec<usize>,
    pub error: IntervalVector,
}

/// Complement of a sorted index set in `0..n`.
pub fn complement(removed: &[usize], n: usize) -> Vec<usize> {
    let mut mark = vec![true; n];
    for &j in removed {
        mark[j] = false;
    }
    (0..n).filter(|&j| mark[j]).collect()
}

/// Drops `removed` rows of `layer` and columns of `next`, adding
/// `W_next[:, removed] · post[removed]` to the next bias.
pub fn reduce_layer(layer: &Dense, next: &Dense, post: &IntervalVector, removed: &[usize]) -> Result<LayerSurgery> {
    let n = layer.outputs();
    if next.inputs() != n {
        return Err(Error::dims("next layer inputs", n, next.inputs()));
    }
    if post.len() != n {
        return Err(Error::dims("removal bounds", n, post.len()));
    }
    let mut removed = removed.to_vec();
    removed.sort_unstable();
    removed.dedup();
    if let Some(&j) = removed.iter().find(|&&j| j >= n) {
        return Err(Error::InvalidArgument(format!("neuron {j} outside layer of {n}")));
    }
    let kept = complement(&removed, n);
    let error = post.project(&removed).mul_matrix(&sparse::select_cols(&next.weights, &removed))?;
    let layer_cut = Dense::new(
        sparse::select_rows(&layer.weights, &kept),
        layer.bias.project(&kept),
        layer.activation,
    )?;
    let next_cut = Dense::new(
        sparse::select_cols(&next.weights, &kept),
        next.bias.add(&error)?,
        next.activation,
    )?;
    Ok(LayerSurgery { layer: layer_cut, next: next_cut, kept, error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReduction {
    pub layer: usize,
    pub rho: Option<f64>,
    pub before: usize,
    pub after: usize,
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub error: IntervalVector,
    pub error_size: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReductionReport {
    pub layers: Vec<LayerReduction>,
}

impl ReductionReport {
    pub fn hidden_before(&self) -> usize {
        self.layers.iter().map(|l| l.before).sum()
    }

    pub fn hidden_after(&self) -> usize {
        self.layers.iter().map(|l| l.after).sum()
    }

    pub fn removed(&self) -> usize {
        self.hidden_before() - self.hidden_after()
    }
}

/// Scores, threshold and surgery for hidden layer `k` of `layers`, whose
/// output bounds are `post`. Updates `layers[k]` and `layers[k + 1]`.
pub(crate) fn reduce_step(
    layers: &mut [Dense],
    k: usize,
    post: &IntervalVector,
    policy: RhoPolicy,
) -> Result<LayerReduction> {
    let n = layers[k].outputs();
    let scores = neuron_scores(&layers[k + 1].weights, post)?;
    let rho = policy.resolve(&scores);
    let removed: Vec<usize> = match rho {
        Some(r) => (0..n).filter(|&j| scores[j] <= r).collect(),
        None => Vec::new(),
    };
    let cut = reduce_layer(&layers[k], &layers[k + 1], post, &removed)?;
    let record = LayerReduction {
        layer: k,
        rho,
        before: n,
        after: cut.kept.len(),
        kept: cut.kept,
        removed,
        error_size: error_size(&cut.error),
        error: cut.error,
    };
    layers[k] = cut.layer;
    layers[k + 1] = cut.next;
    Ok(record)
}

/// Reduces every hidden layer in order, recomputing bounds on the reduced
/// prefix before each step. Exact hulls go through the reach engine.
pub fn reduce_network(
    net: &Network,
    input: &IntervalVector,
    policy: RhoPolicy,
    method: BoundMethod,
) -> Result<(Network, ReductionReport)> {
    policy.validate()?;
    if method == BoundMethod::ExactHull {
        let cfg = crate::reach::ReachConfig { rho: policy, gamma: 0.0, bounds: method, ..Default::default() };
        let r = crate::reach::reach_ffnn(net, &crate::HybridZonotope::from_box(input), &cfg)?;
        return Ok((r.reduced, r.reduction));
    }
    if input.len() != net.input_len() {
        return Err(Error::dims("reduction input box", net.input_len(), input.len()));
    }
    let mut layers: Vec<Dense> = net.dense_layers()?.into_iter().cloned().collect();
    let mut prop = BoundPropagator::new(input.clone(), method)?;
    let mut report = ReductionReport::default();
    for k in 0..layers.len().saturating_sub(1) {
        let b = prop.push(&layers[k])?;
        let record = reduce_step(&mut layers, k, &b.post, policy)?;
        prop.restrict_last(&record.kept, &layers[k])?;
        report.layers.push(record);
    }
    let reduced = Network::new(net.input_shape(), layers.into_iter().map(Layer::FullyConnected).collect())?;
    Ok((reduced, report))
}
