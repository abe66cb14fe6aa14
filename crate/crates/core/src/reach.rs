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

//! Reachable-set propagation through ReLU networks.
//!
//! Each hidden layer is an affine map, a Minkowski sum with its interval
//! bias, optional neuron removal, and the ReLU graph over per-neuron bounds.
//! A crossing neuron becomes either the exact two-segment graph (one binary
//! factor) or the triangle hull of it (continuous only), depending on how
//! lopsided its bounds are relative to `γ`.
//!
//! The engine builds each layer's image directly: stable neurons reuse the
//! incoming rows, and only crossing neurons add factors and a row linking
//! their input coordinate to the incoming set. [`layer_graph`] is the
//! full input/output graph construction and serves as a reference.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{meet, BoundMethod, BoundPropagator, MIN_CROSSING_WIDTH};
use crate::error::{Error, Result};
use crate::hz::{Complexity, Factors, HybridZonotope, QueryOptions};
use crate::interval::IntervalVector;
use crate::lowering::lower_network;
use crate::model::{infer, Activation, Dense, Layer, Network};
use crate::reduce::{reduce_step, ReductionReport, RhoPolicy};
use crate::sparse::{self, SparseMatrix};

/// Graph piece chosen for one neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReluPiece {
    /// `y = x`, the neuron is never negative.
    Identity,
    /// `y = 0`, the neuron is never positive.
    Zero,
    /// Both segments, selected by one binary factor.
    Union,
    /// Convex hull of both segments.
    Triangle,
}

impl ReluPiece {
    pub fn is_crossing(self) -> bool {
        matches!(self, ReluPiece::Union | ReluPiece::Triangle)
    }
}

/// Piece selection over `[alpha, beta]`.
pub fn classify_neuron(alpha: f64, beta: f64, gamma: f64) -> Result<ReluPiece> {
    if alpha.is_nan() || beta.is_nan() || alpha > beta {
        return Err(Error::InvalidArgument(format!("neuron bounds [{alpha}, {beta}] are not ordered")));
    }
    Ok(if alpha >= 0.0 {
        ReluPiece::Identity
    } else if beta <= 0.0 {
        ReluPiece::Zero
    } else if beta - alpha < MIN_CROSSING_WIDTH {
        ReluPiece::Identity
    } else if -alpha / beta > gamma && beta / -alpha > gamma {
        ReluPiece::Union
    } else {
        ReluPiece::Triangle
    })
}

/// Factor layout of a crossing piece: `(x gens, y gens, x center, y center,
/// constraint rows, rhs, binary count)`. Union factors are `[f1, f2, s1, s2]`
/// plus the binary `λ`; triangle factors are the three vertex weights.
struct PieceForm {
    x_gens: Vec<f64>,
    y_gens: Vec<f64>,
    x_center: f64,
    y_center: f64,
    /// `(continuous coefficients, binary coefficients, rhs)` per row.
    rows: Vec<(Vec<f64>, Vec<f64>, f64)>,
    binaries: usize,
}

fn piece_form(piece: ReluPiece, alpha: f64, beta: f64) -> PieceForm {
    match piece {
        ReluPiece::Union => PieceForm {
            // λ = 1: x = y ∈ [0, β];  λ = −1: x ∈ [α, 0], y = 0
            x_gens: vec![alpha / 2.0, beta / 2.0, 0.0, 0.0],
            y_gens: vec![0.0, beta / 2.0, 0.0, 0.0],
            x_center: (alpha + beta) / 2.0,
            y_center: beta / 2.0,
            rows: vec![
                (vec![1.0, 0.0, -1.0, 0.0], vec![1.0], -1.0),
                (vec![0.0, 1.0, 0.0, -1.0], vec![-1.0], -1.0),
            ],
            binaries: 1,
        },
        ReluPiece::Triangle => PieceForm {
            // vertices (α, 0), (0, 0), (β, β) with weights (1 + ξ)/2
            x_gens: vec![alpha / 2.0, 0.0, beta / 2.0],
            y_gens: vec![0.0, 0.0, beta / 2.0],
            x_center: (alpha + beta) / 2.0,
            y_center: beta / 2.0,
            rows: vec![(vec![1.0, 1.0, 1.0], vec![], -1.0)],
            binaries: 0,
        },
        ReluPiece::Identity | ReluPiece::Zero => unreachable!("stable pieces have no factors"),
    }
}

/// Factor values placing `x` on a crossing piece: `(continuous, binary)`.
fn piece_factors(piece: ReluPiece, alpha: f64, beta: f64, x: f64) -> (Vec<f64>, Vec<f64>) {
    let unit = |v: f64| v.clamp(-1.0, 1.0);
    match piece {
        ReluPiece::Union => {
            if x >= 0.0 {
                let f2 = unit(2.0 * x / beta - 1.0);
                (vec![-1.0, f2, 1.0, f2], vec![1.0])
            } else {
                let f1 = unit(2.0 * x / alpha - 1.0);
                (vec![f1, -1.0, f1, 1.0], vec![-1.0])
            }
        }
        ReluPiece::Triangle => {
            let (w1, w3) = if x <= 0.0 { ((x / alpha).clamp(0.0, 1.0), 0.0) } else { (0.0, (x / beta).clamp(0.0, 1.0)) };
            let w2 = 1.0 - w1 - w3;
            (vec![2.0 * w1 - 1.0, 2.0 * w2 - 1.0, 2.0 * w3 - 1.0], vec![])
        }
        ReluPiece::Identity | ReluPiece::Zero => (vec![], vec![]),
    }
}

/// Over-approximation of `{(x, ReLU(x)) : x ∈ [alpha, beta]}` in `R²`.
pub fn relu_graph_1d(alpha: f64, beta: f64, gamma: f64) -> Result<HybridZonotope> {
    let piece = classify_neuron(alpha, beta, gamma)?;
    match piece {
        ReluPiece::Identity | ReluPiece::Zero => {
            let (m, r) = ((alpha + beta) / 2.0, (beta - alpha) / 2.0);
            let y = if piece == ReluPiece::Identity { 1.0 } else { 0.0 };
            HybridZonotope::zonotope(vec![m, y * m], sparse::from_dense(2, 1, &[r, y * r]))
        }
        _ => {
            let f = piece_form(piece, alpha, beta);
            let ng = f.x_gens.len();
            let gens = sparse::from_rows(&[f.x_gens.clone(), f.y_gens.clone()], ng);
            let ac = sparse::from_rows(&f.rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>(), ng);
            let ab = sparse::from_rows(&f.rows.iter().map(|r| r.1.clone()).collect::<Vec<_>>(), f.binaries);
            HybridZonotope::new(
                vec![f.x_center, f.y_center],
                gens,
                sparse::zeros(2, f.binaries),
                ac,
                ab,
                f.rows.iter().map(|r| r.2).collect(),
            )
        }
    }
}

/// Fails when `bounds` does not enclose `z`, checking the generator box first
/// and the exact hull only if needed.
fn check_enclosure(z: &HybridZonotope, bounds: &IntervalVector, opts: &QueryOptions) -> Result<()> {
    const TOL: f64 = 1e-9;
    if bounds.encloses(&z.generator_box(), TOL) {
        return Ok(());
    }
    let hull = z.interval_hull_with(opts)?;
    for i in 0..hull.len() {
        let (l, u) = bounds.get(i);
        let (hl, hu) = hull.get(i);
        if hl < l - TOL || hu > u + TOL {
            return Err(Error::UnsoundBounds { index: i, lower: l, upper: u, hull_lower: hl, hull_upper: hu });
        }
    }
    Ok(())
}

/// Graph of the elementwise ReLU over `z` in `R^{2n}`, inputs first. Built as
/// the product of per-neuron pieces over `bounds`, reordered so inputs precede
/// outputs, and intersected with `z` on the input block.
pub fn layer_graph(z: &HybridZonotope, bounds: &IntervalVector, gamma: f64, opts: &QueryOptions) -> Result<HybridZonotope> {
    let n = z.dim();
    if bounds.len() != n {
        return Err(Error::dims("graph bounds", n, bounds.len()));
    }
    check_enclosure(z, bounds, opts)?;
    let mut product = HybridZonotope::point(&[]);
    for i in 0..n {
        let (a, b) = bounds.get(i);
        product = product.cartesian_product(&relu_graph_1d(a, b, gamma)?);
    }
    let shuffle = sparse::from_triplets(
        2 * n,
        2 * n,
        (0..n).flat_map(|i| [(i, 2 * i, 1.0), (n + i, 2 * i + 1, 1.0)]),
    );
    let graph = product.affine_map(&shuffle, &vec![0.0; 2 * n])?;
    let inputs = sparse::hstack(&[&sparse::identity(n), &sparse::zeros(n, n)]);
    graph.generalized_intersection(z, &inputs)
}

/// One crossing neuron's piece in a layer image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingPiece {
    /// Coordinate within the layer image's input.
    pub neuron: usize,
    pub piece: ReluPiece,
    pub alpha: f64,
    pub beta: f64,
}

/// `{ReLU(x) : x ∈ z}` over-approximated with per-neuron `bounds`. Incoming
/// factors come first; each crossing neuron appends its own factors in
/// coordinate order. Stable neurons are taken from `bounds` as given.
pub fn relu_layer_image(
    z: &HybridZonotope,
    bounds: &IntervalVector,
    gamma: f64,
) -> Result<(HybridZonotope, Vec<CrossingPiece>)> {
    let n = z.dim();
    if bounds.len() != n {
        return Err(Error::dims("image bounds", n, bounds.len()));
    }
    let (ng, nb, nc) = (z.num_cont(), z.num_bin(), z.num_cons());
    let mut center = vec![0.0; n];
    let mut gc = Vec::new();
    let mut gb = Vec::new();
    let mut ac: Vec<(usize, usize, f64)> = sparse::entries(z.con_cont());
    let mut ab: Vec<(usize, usize, f64)> = sparse::entries(z.con_bin());
    let mut rhs = z.con_rhs().to_vec();
    let mut crossing = Vec::new();
    let (mut col, mut bcol) = (ng, nb);
    for i in 0..n {
        let (alpha, beta) = bounds.get(i);
        let piece = classify_neuron(alpha, beta, gamma)?;
        match piece {
            ReluPiece::Zero => {}
            ReluPiece::Identity => {
                center[i] = z.center()[i];
                if let Some(row) = z.cont_gens().outer_view(i) {
                    gc.extend(row.iter().map(|(j, &v)| (i, j, v)));
                }
                if let Some(row) = z.bin_gens().outer_view(i) {
                    gb.extend(row.iter().map(|(j, &v)| (i, j, v)));
                }
            }
            ReluPiece::Union | ReluPiece::Triangle => {
                let f = piece_form(piece, alpha, beta);
                center[i] = f.y_center;
                gc.extend(f.y_gens.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(k, &v)| (i, col + k, v)));
                for (c, b, r) in &f.rows {
                    let row = rhs.len();
                    ac.extend(c.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(k, &v)| (row, col + k, v)));
                    ab.extend(b.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(k, &v)| (row, bcol + k, v)));
                    rhs.push(*r);
                }
                // piece input equals the incoming coordinate
                let row = rhs.len();
                ac.extend(f.x_gens.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(k, &v)| (row, col + k, v)));
                if let Some(g) = z.cont_gens().outer_view(i) {
                    ac.extend(g.iter().map(|(j, &v)| (row, j, -v)));
                }
                if let Some(g) = z.bin_gens().outer_view(i) {
                    ab.extend(g.iter().map(|(j, &v)| (row, j, -v)));
                }
                rhs.push(z.center()[i] - f.x_center);
                col += f.x_gens.len();
                bcol += f.binaries;
                crossing.push(CrossingPiece { neuron: i, piece, alpha, beta });
            }
        }
    }
    let rows = rhs.len();
    debug_assert!(rows >= nc);
    let image = HybridZonotope::new(
        center,
        sparse::from_triplets(n, col, gc),
        sparse::from_triplets(n, bcol, gb),
        sparse::from_triplets(rows, col, ac),
        sparse::from_triplets(rows, bcol, ab),
        rhs,
    )?;
    Ok((image, crossing))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachConfig {
    pub rho: RhoPolicy,
    /// Relaxation dial in `[0, 1]`; zero keeps every crossing neuron exact.
    pub gamma: f64,
    pub bounds: BoundMethod,
    pub query: QueryOptions,
}

impl Default for ReachConfig {
    fn default() -> Self {
        Self { rho: RhoPolicy::Fixed(0.0), gamma: 0.0, bounds: BoundMethod::Crown, query: QueryOptions::default() }
    }
}

impl ReachConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        self.rho.validate()
    }
}

/// What happened at one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub layer: usize,
    pub activation: Activation,
    pub neurons: usize,
    pub kept: usize,
    /// Pre-activation bounds of the kept neurons, as used for the graph.
    pub bounds: IntervalVector,
    pub exact_pieces: usize,
    pub relaxed_pieces: usize,
    /// The set after this layer.
    pub complexity: Complexity,
    pub seconds: f64,
}

/// Factor bookkeeping that replays a concrete input through the
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerPlan {
    /// `(row, midpoint, radius)` of every bias coordinate that added a factor.
    box_factors: Vec<(usize, f64, f64)>,
    kept: Vec<usize>,
    /// Crossing pieces, with `neuron` in original layer coordinates.
    crossing: Vec<CrossingPiece>,
}

#[derive(Debug, Clone)]
pub struct ReachResult {
    pub output: HybridZonotope,
    pub layers: Vec<LayerRecord>,
    pub reduction: ReductionReport,
    /// The network as reduced during propagation.
    pub reduced: Network,
    /// The fully-connected network that was analysed.
    pub network: Network,
    pub config: ReachConfig,
    pub seconds: f64,
    plan: Vec<LayerPlan>,
}

/// Factors of `x` in [`HybridZonotope::from_box`]`(b)`.
pub fn box_factors(b: &IntervalVector, x: &[f64]) -> Result<Factors> {
    if x.len() != b.len() {
        return Err(Error::dims("box point", b.len(), x.len()));
    }
    let (mid, rad) = (b.midpoints(), b.radii());
    Ok(Factors {
        cont: (0..b.len()).filter(|&i| rad[i] > 0.0).map(|i| ((x[i] - mid[i]) / rad[i]).clamp(-1.0, 1.0)).collect(),
        bin: vec![],
    })
}

/// Propagates `input` through a fully-connected network.
pub fn reach_ffnn(net: &Network, input: &HybridZonotope, cfg: &ReachConfig) -> Result<ReachResult> {
    cfg.validate()?;
    let start = Instant::now();
    if input.dim() != net.input_len() {
        return Err(Error::dims("reach input set", net.input_len(), input.dim()));
    }
    let mut layers: Vec<Dense> = net.dense_layers()?.into_iter().cloned().collect();
    let anchor = if input.num_cons() == 0 {
        input.generator_box()
    } else {
        input.interval_hull_with(&cfg.query)?
    };
    let mut prop = match cfg.bounds {
        BoundMethod::ExactHull => None,
        m => Some(BoundPropagator::new(anchor, m)?),
    };
    let mut x = input.clone();
    let mut records = Vec::with_capacity(layers.len());
    let mut plan = Vec::with_capacity(layers.len());
    let mut reduction = ReductionReport::default();
    let count = layers.len();
    for k in 0..count {
        let t0 = Instant::now();
        let layer = layers[k].clone();
        let n = layer.outputs();
        let z = x.affine_map(&layer.weights, &vec![0.0; n])?.minkowski_sum_box(&layer.bias)?;
        let (mid, rad) = (layer.bias.midpoints(), layer.bias.radii());
        let box_factors = (0..n).filter(|&i| rad[i] > 0.0).map(|i| (i, mid[i], rad[i])).collect();

        // selection bounds stay independent of γ; the graph may use tighter ones
        let needed = k + 1 < count || layer.activation == Activation::Relu;
        let (select, graph) = match prop.as_mut() {
            _ if !needed => (IntervalVector::zeros(n), IntervalVector::zeros(n)),
            Some(p) => {
                let b = p.push(&layer)?;
                let tight = if layer.activation == Activation::Relu { meet(&b.pre, &z.generator_box()) } else { b.pre.clone() };
                (b.pre, tight)
            }
            None => {
                let h = z.interval_hull_with(&cfg.query)?;
                (h.clone(), h)
            }
        };

        let mut kept: Vec<usize> = (0..n).collect();
        if k + 1 < count {
            let post = layer.activation.apply_interval(&select);
            let record = reduce_step(&mut layers, k, &post, cfg.rho)?;
            kept = record.kept.clone();
            if let Some(p) = prop.as_mut() {
                p.restrict_last(&kept, &layers[k])?;
            }
            reduction.layers.push(record);
        }
        let zk = if kept.len() == n { z } else { z.project(&kept)? };
        let jk = graph.project(&kept);
        let mut crossing = Vec::new();
        x = match layer.activation {
            Activation::Identity => zk,
            Activation::Relu => {
                let (img, pieces) = relu_layer_image(&zk, &jk, cfg.gamma)?;
                crossing = pieces.into_iter().map(|p| CrossingPiece { neuron: kept[p.neuron], ..p }).collect();
                img
            }
        };
        let exact = crossing.iter().filter(|p| p.piece == ReluPiece::Union).count();
        records.push(LayerRecord {
            layer: k,
            activation: layer.activation,
            neurons: n,
            kept: kept.len(),
            bounds: jk,
            exact_pieces: exact,
            relaxed_pieces: crossing.len() - exact,
            complexity: x.complexity(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        tracing::debug!(layer = k, kept = kept.len(), neurons = n, ng = x.num_cont(), nb = x.num_bin(), nc = x.num_cons(), "layer propagated");
        plan.push(LayerPlan { box_factors, kept, crossing });
    }
    let reduced = Network::new(net.input_shape(), layers.into_iter().map(Layer::FullyConnected).collect())?;
    Ok(ReachResult {
        output: x,
        layers: records,
        reduction,
        reduced,
        network: net.clone(),
        config: *cfg,
        seconds: start.elapsed().as_secs_f64(),
        plan,
    })
}

/// Lowers a convolutional network and propagates the box `input` over its
/// flattened input.
pub fn reach_cnn(cnn: &Network, input: &IntervalVector, cfg: &ReachConfig) -> Result<ReachResult> {
    let lowered = lower_network(cnn)?;
    reach_ffnn(&lowered.network, &HybridZonotope::from_box(input), cfg)
}

fn dense_row_dot(w: &SparseMatrix, i: usize, a: &[f64], mask: &[bool]) -> f64 {
    w.outer_view(i)
        .map(|row| row.iter().filter(|(j, _)| mask[*j]).map(|(j, v)| v * a[j]).sum())
        .unwrap_or(0.0)
}

impl ReachResult {
    /// Replays input `x`, whose input-set factors are `input`, through the
    /// construction. The analysed network must have point biases.
    pub fn witness(&self, input: &Factors, x: &[f64]) -> Result<Factors> {
        let layers = self.network.dense_layers()?;
        if x.len() != self.network.input_len() {
            return Err(Error::dims("witness input", self.network.input_len(), x.len()));
        }
        let mut cont = input.cont.clone();
        let mut bin = input.bin.clone();
        let mut a = x.to_vec();
        let mut mask = vec![true; a.len()];
        for (k, (d, plan)) in layers.iter().zip(&self.plan).enumerate() {
            if !d.bias.is_point() {
                return Err(Error::IntervalBias { layer: k });
            }
            let mut z = sparse::mul_vec(&d.weights, &a);
            for (zi, b) in z.iter_mut().zip(d.bias.lower()) {
                *zi += b;
            }
            for &(i, mid, rad) in &plan.box_factors {
                let bias = z[i] - dense_row_dot(&d.weights, i, &a, &mask);
                cont.push(((bias - mid) / rad).clamp(-1.0, 1.0));
            }
            for p in &plan.crossing {
                let (c, b) = piece_factors(p.piece, p.alpha, p.beta, z[p.neuron]);
                cont.extend(c);
                bin.extend(b);
            }
            a = z.into_iter().map(|v| d.activation.apply(v)).collect();
            mask = vec![false; a.len()];
            for &j in &plan.kept {
                mask[j] = true;
            }
        }
        Ok(Factors { cont, bin })
    }

    /// Whether the network's output at `x` lies in the result within `tol`.
    /// A replayed witness settles most points; the rest go to an exact
    /// membership query.
    pub fn certify_sample(&self, input: &Factors, x: &[f64], tol: f64) -> Result<bool> {
        let y = infer(&self.network, x)?;
        if let Ok(f) = self.witness(input, x) {
            if f.cont.len() == self.output.num_cont() && f.bin.len() == self.output.num_bin() {
                let v = self.output.factor_violation(&f.cont, &f.bin)?;
                let p = self.output.evaluate(&f.cont, &f.bin)?;
                if v <= tol && p.iter().zip(&y).all(|(a, b)| (a - b).abs() <= tol) {
                    return Ok(true);
                }
            }
        }
        self.output.contains_point_with(&y, tol, &self.config.query)
    }

    /// Number of crossing neurons kept exact across all layers.
    pub fn exact_pieces(&self) -> usize {
        self.layers.iter().map(|l| l.exact_pieces).sum()
    }

    /// `layer,activation,neurons,kept,exact_pieces,relaxed_pieces,dim,ng,nb,nc,seconds`.
    pub fn complexity_csv(&self) -> String {
        let mut out = String::from("layer,activation,neurons,kept,exact_pieces,relaxed_pieces,dim,ng,nb,nc,seconds\n");
        for r in &self.layers {
            let act = match r.activation {
                Activation::Relu => "relu",
                Activation::Identity => "identity",
            };
            let c = r.complexity;
            let _ = writeln!(
                out,
                "{},{act},{},{},{},{},{},{},{},{},{:.6}",
                r.layer, r.neurons, r.kept, r.exact_pieces, r.relaxed_pieces, c.dim, c.ng, c.nb, c.nc, r.seconds
            );
        }
        out
    }
}
