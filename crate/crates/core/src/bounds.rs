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


//! Per-layer interval bounds for fully-connected networks.
//!
//! [`BoundPropagator`] walks a network one layer at a time and can shrink the
//! most recent layer to a subset of its neurons, so the bounds of every later
//! layer are always computed on the reduced prefix. Linear relaxations are
//! anchored to a box over the network input.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hz::{HybridZonotope, QueryOptions};
use crate::interval::IntervalVector;
use crate::model::{Activation, Dense, Network};
use crate::sparse::SparseMatrix;

/// Below this width a crossing neuron is not relaxed with a secant.
pub const MIN_CROSSING_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Ibp,
    #[default]
    Crown,
    ExactHull,
}

impl FromStr for BoundMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ibp" => Ok(BoundMethod::Ibp),
            "crown" => Ok(BoundMethod::Crown),
            "exact" | "exact_hull" => Ok(BoundMethod::ExactHull),
            other => Err(Error::InvalidArgument(format!("unknown bound method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBounds {
    pub pre: IntervalVector,
    pub post: IntervalVector,
}

/// Affine lower and upper forms `A x + b` in the network input, one row per
/// neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBoundPair {
    pub lower_slopes: Vec<Vec<f64>>,
    pub lower_offsets: Vec<f64>,
    pub upper_slopes: Vec<Vec<f64>>,
    pub upper_offsets: Vec<f64>,
}

impl LinearBoundPair {
    /// `(lower, upper)` forms evaluated at `x`.
    pub fn evaluate(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let eval = |slopes: &[Vec<f64>], offsets: &[f64]| -> Vec<f64> {
            slopes
                .iter()
                .zip(offsets)
                .map(|(row, b)| b + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
                .collect()
        };
        (eval(&self.lower_slopes, &self.lower_offsets), eval(&self.upper_slopes, &self.upper_offsets))
    }
}

/// `(slope, offset)` of the lower and upper linear relaxations of ReLU over
/// `[l, u]`.
pub fn relu_relaxation(l: f64, u: f64) -> ((f64, f64), (f64, f64)) {
    if u <= 0.0 {
        ((0.0, 0.0), (0.0, 0.0))
    } else if l >= 0.0 {
        ((1.0, 0.0), (1.0, 0.0))
    } else if u - l < MIN_CROSSING_WIDTH {
        // the output lies in [0, u]
        ((0.0, 0.0), (0.0, u))
    } else {
        let s = u / (u - l);
        let lower = if -l >= u { 0.0 } else { 1.0 };
        ((lower, 0.0), (s, -l * s))
    }
}

fn relaxation(act: Activation, l: f64, u: f64) -> ((f64, f64), (f64, f64)) {
    match act {
        Activation::Identity => ((1.0, 0.0), (1.0, 0.0)),
        Activation::Relu => relu_relaxation(l, u),
    }
}

/// Interval intersection that tolerates round-off disagreement: crossed
/// endpoints are returned as the gap between them.
pub(crate) fn meet(a: &IntervalVector, b: &IntervalVector) -> IntervalVector {
    let (mut lo, mut hi) = (Vec::with_capacity(a.len()), Vec::with_capacity(a.len()));
    for i in 0..a.len() {
        let l = a.lower()[i].max(b.lower()[i]);
        let u = a.upper()[i].min(b.upper()[i]);
        lo.push(l.min(u));
        hi.push(l.max(u));
    }
    IntervalVector::new(lo, hi).expect("ordered by construction")
}

#[derive(Debug, Clone)]
struct Stage {
    layer: Dense,
    pre: IntervalVector,
}

/// Layer-by-layer bound computation over a (possibly reduced) network.
#[derive(Debug, Clone)]
pub struct BoundPropagator {
    input: IntervalVector,
    linear: bool,
    stages: Vec<Stage>,
    last_linear: Option<LinearBoundPair>,
}

impl BoundPropagator {
    /// `method` must be [`BoundMethod::Ibp`] or [`BoundMethod::Crown`].
    pub fn new(input: IntervalVector, method: BoundMethod) -> Result<Self> {
        let linear = match method {
            BoundMethod::Ibp => false,
            BoundMethod::Crown => true,
            BoundMethod::ExactHull => {
                return Err(Error::InvalidArgument("exact hulls need a propagated set, not a box".into()))
            }
        };
        Ok(Self { input, linear, stages: Vec::new(), last_linear: None })
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    /// Output bounds of the most recent layer, or the input box.
    pub fn current_post(&self) -> IntervalVector {
        match self.stages.last() {
            Some(s) => s.layer.activation.apply_interval(&s.pre),
            None => self.input.clone(),
        }
    }

    /// Appends a layer and returns its bounds.
    pub fn push(&mut self, layer: &Dense) -> Result<LayerBounds> {
        let prev = self.current_post();
        let mut pre = prev.mul_matrix(&layer.weights)?.add(&layer.bias)?;
        self.last_linear = None;
        if self.linear {
            let (crown, pair) = self.back_substitute(layer)?;
            pre = meet(&crown, &pre);
            self.last_linear = Some(pair);
        }
        self.stages.push(Stage { layer: layer.clone(), pre: pre.clone() });
        Ok(LayerBounds { post: layer.activation.apply_interval(&pre), pre })
    }

    /// Replaces the most recent layer by its rows `kept`, already cut down to
    /// `layer`. Its bounds are projected accordingly.
    pub fn restrict_last(&mut self, kept: &[usize], layer: &Dense) -> Result<()> {
        let stage = self
            .stages
            .last_mut()
            .ok_or_else(|| Error::InvalidArgument("no layer to restrict".into()))?;
        if layer.outputs() != kept.len() {
            return Err(Error::dims("restricted layer rows", kept.len(), layer.outputs()));
        }
        stage.pre = stage.pre.project(kept);
        stage.layer = layer.clone();
        self.last_linear = None;
        Ok(())
    }

    /// Linear forms of the most recent layer's pre-activations, when the
    /// propagator uses them.
    pub fn last_linear_bounds(&self) -> Option<&LinearBoundPair> {
        self.last_linear.as_ref()
    }

    /// Backward substitution of the new layer's rows through every stored
    /// stage down to the input box.
    fn back_substitute(&self, layer: &Dense) -> Result<(IntervalVector, LinearBoundPair)> {
        let m = layer.outputs();
        let n = layer.inputs();
        let mut lo = Coeffs::from_sparse(&layer.weights, layer.bias.lower().to_vec());
        let mut up = Coeffs::from_sparse(&layer.weights, layer.bias.upper().to_vec());
        debug_assert_eq!(lo.cols, n);
        for stage in self.stages.iter().rev() {
            let (l, u) = (stage.pre.lower(), stage.pre.upper());
            let relax: Vec<_> = (0..l.len()).map(|j| relaxation(stage.layer.activation, l[j], u[j])).collect();
            lo.through_activation(&relax, false);
            up.through_activation(&relax, true);
            lo.through_affine(&stage.layer.weights, &stage.layer.bias, false);
            up.through_affine(&stage.layer.weights, &stage.layer.bias, true);
        }
        let (xl, xu) = (self.input.lower(), self.input.upper());
        let mut lower = Vec::with_capacity(m);
        let mut upper = Vec::with_capacity(m);
        for r in 0..m {
            let row_lo = &lo.rows[r];
            let row_up = &up.rows[r];
            let mut a = lo.offsets[r];
            let mut b = up.offsets[r];
            for j in 0..row_lo.len() {
                a += (row_lo[j] * xl[j]).min(row_lo[j] * xu[j]);
                b += (row_up[j] * xl[j]).max(row_up[j] * xu[j]);
            }
            lower.push(a.min(b));
            upper.push(a.max(b));
        }
        let pair = LinearBoundPair {
            lower_slopes: lo.rows,
            lower_offsets: lo.offsets,
            upper_slopes: up.rows,
            upper_offsets: up.offsets,
        };
        Ok((IntervalVector::new(lower, upper)?, pair))
    }
}

/// Dense coefficient rows over the current back-substitution variables plus
/// one constant per row.
struct Coeffs {
    rows: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    cols: usize,
}

impl Coeffs {
    fn from_sparse(w: &SparseMatrix, offsets: Vec<f64>) -> Self {
        let mut rows = vec![vec![0.0; w.cols()]; w.rows()];
        for (v, (i, j)) in w.iter() {
            rows[i][j] += v;
        }
        Coeffs { rows, offsets, cols: w.cols() }
    }

    /// From coefficients on activations to coefficients on pre-activations.
    /// `upper` picks the relaxation that bounds the row from above.
    fn through_activation(&mut self, relax: &[((f64, f64), (f64, f64))], upper: bool) {
        for (row, off) in self.rows.iter_mut().zip(self.offsets.iter_mut()) {
            for (c, &(lo, up)) in row.iter_mut().zip(relax) {
                let (s, t) = if (*c >= 0.0) == upper { up } else { lo };
                *off += *c * t;
                *c *= s;
            }
        }
    }

    /// From coefficients on `W a + b` to coefficients on `a`.
    fn through_affine(&mut self, w: &SparseMatrix, bias: &IntervalVector, upper: bool) {
        let (bl, bu) = (bias.lower(), bias.upper());
        let mut next = vec![vec![0.0; w.cols()]; self.rows.len()];
        for (r, row) in self.rows.iter().enumerate() {
            let mut off = 0.0;
            for (i, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    off += if (c >= 0.0) == upper { c * bu[i] } else { c * bl[i] };
                }
            }
            self.offsets[r] += off;
            let out = &mut next[r];
            for (v, (i, j)) in w.iter() {
                let c = row[i];
                if c != 0.0 {
                    out[j] += c * v;
                }
            }
        }
        self.rows = next;
        self.cols = w.cols();
    }
}

fn propagate(net: &Network, input: &IntervalVector, method: BoundMethod) -> Result<Vec<LayerBounds>> {
    if input.len() != net.input_len() {
        return Err(Error::dims("bound input box", net.input_len(), input.len()));
    }
    let mut p = BoundPropagator::new(input.clone(), method)?;
    net.dense_layers()?.into_iter().map(|d| p.push(d)).collect()
}

/// Interval bound propagation.
pub fn ibp_bounds(net: &Network, input: &IntervalVector) -> Result<Vec<LayerBounds>> {
    propagate(net, input, BoundMethod::Ibp)
}

/// Backward linear relaxation bounds, never looser than [`ibp_bounds`].
pub fn crown_bounds(net: &Network, input: &IntervalVector) -> Result<Vec<LayerBounds>> {
    propagate(net, input, BoundMethod::Crown)
}

/// Tightest box around a propagated set.
pub fn exact_hull_bounds(z: &HybridZonotope, opts: &QueryOptions) -> Result<IntervalVector> {
    z.interval_hull_with(opts)
}

/// `layer,neuron,pre_lower,pre_upper,post_lower,post_upper`, zero-based.
pub fn bounds_csv(bounds: &[LayerBounds]) -> String {
    let mut out = String::from("layer,neuron,pre_lower,pre_upper,post_lower,post_upper\n");
    for (k, b) in bounds.iter().enumerate() {
        for i in 0..b.pre.len() {
            let (pl, pu) = b.pre.get(i);
            let (ql, qu) = b.post.get(i);
            let _ = writeln!(out, "{k},{i},{pl:?},{pu:?},{ql:?},{qu:?}");
        }
    }
    out
}
