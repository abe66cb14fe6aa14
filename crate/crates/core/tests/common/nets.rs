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


//! Random fully-connected networks and an exact reachability oracle for
//! two-dimensional input boxes.
//!
//! The oracle splits the input box into convex polygons on which every ReLU
//! keeps one phase, tracking the affine input-output map of each piece. The
//! reachable set is the union of the pieces' images, so its support in any
//! direction is the best polygon vertex.

use hzreach::model::infer;
use hzreach::{sparse, Activation, Dense, IntervalVector, Network};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// ReLU hidden layers of the given widths and an identity output layer.
pub fn random_ffnn(rng: &mut ChaCha8Rng, inputs: usize, hidden: &[usize], outputs: usize) -> Network {
    let mut widths = vec![inputs];
    widths.extend_from_slice(hidden);
    widths.push(outputs);
    let last = widths.len() - 2;
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let (n, m) = (w[0], w[1]);
            let scale = 1.5 / (n as f64).sqrt();
            let weights: Vec<f64> = (0..m * n).map(|_| rng.gen_range(-scale..scale)).collect();
            let bias: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let act = if k == last { Activation::Identity } else { Activation::Relu };
            Dense::with_point_bias(sparse::from_dense(m, n, &weights), &bias, act).unwrap()
        })
        .collect();
    Network::ffnn(layers).unwrap()
}

/// Random hidden widths with at most `total` neurons over 1..=`max_layers` layers.
pub fn random_widths(rng: &mut ChaCha8Rng, total: usize, max_layers: usize) -> Vec<usize> {
    let layers = rng.gen_range(1..=max_layers);
    let mut left = total;
    let mut out = Vec::new();
    for k in 0..layers {
        let room = left - (layers - k - 1);
        let w = rng.gen_range(1..=room.min(8));
        out.push(w);
        left -= w;
    }
    out
}

pub fn random_box(rng: &mut ChaCha8Rng, n: usize) -> IntervalVector {
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let c = rng.gen_range(-1.0..1.0);
            let r = rng.gen_range(0.05..1.0);
            (c - r, c + r)
        })
        .collect();
    IntervalVector::from_pairs(&pairs).unwrap()
}

pub fn sample_box(rng: &mut ChaCha8Rng, b: &IntervalVector) -> Vec<f64> {
    (0..b.len())
        .map(|i| {
            let (l, u) = b.get(i);
            if l == u {
                l
            } else {
                rng.gen_range(l..=u)
            }
        })
        .collect()
}

/// The same network with every layer after `k` dropped and layer `k`'s
/// activation removed: its output is layer `k`'s pre-activation.
pub fn pre_activation_prefix(net: &Network, k: usize) -> Network {
    let mut layers: Vec<Dense> = net.dense_layers().unwrap()[..=k].iter().map(|d| (*d).clone()).collect();
    layers[k].activation = Activation::Identity;
    Network::ffnn(layers).unwrap()
}

type Point = [f64; 2];

/// Part of a convex polygon where `a·x + c ≥ 0`.
fn clip(poly: &[Point], a: [f64; 2], c: f64) -> Vec<Point> {
    let f = |p: &Point| a[0] * p[0] + a[1] * p[1] + c;
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let (fp, fq) = (f(&p), f(&q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// A polygon of inputs and the affine output map `A x + b` on it.
pub struct Piece {
    pub poly: Vec<Point>,
    pub a: Vec<[f64; 2]>,
    pub b: Vec<f64>,
}

/// Every activation region of a two-input network over a box.
pub fn regions_2d(net: &Network, b: &IntervalVector) -> Vec<Piece> {
    assert_eq!(net.input_len(), 2);
    let layers: Vec<(Vec<f64>, usize, usize, Vec<f64>, Activation)> = net
        .dense_layers()
        .unwrap()
        .iter()
        .map(|d| {
            assert!(d.bias.is_point());
            (sparse::to_dense(&d.weights), d.outputs(), d.inputs(), d.bias.lower().to_vec(), d.activation)
        })
        .collect();
    let (x0, x1) = (b.get(0), b.get(1));
    let poly = vec![[x0.0, x1.0], [x0.1, x1.0], [x0.1, x1.1], [x0.0, x1.1]];
    let mut out = Vec::new();
    let a = vec![[1.0, 0.0], [0.0, 1.0]];
    descend(&layers, 0, poly, a, vec![0.0, 0.0], &mut out);
    out
}

fn descend(
    layers: &[(Vec<f64>, usize, usize, Vec<f64>, Activation)],
    k: usize,
    poly: Vec<Point>,
    a: Vec<[f64; 2]>,
    b: Vec<f64>,
    out: &mut Vec<Piece>,
) {
    if k == layers.len() {
        out.push(Piece { poly, a, b });
        return;
    }
    let (w, m, n, v, act) = &layers[k];
    let mut za = vec![[0.0; 2]; *m];
    let mut zb = v.clone();
    for i in 0..*m {
        for j in 0..*n {
            let wij = w[i * n + j];
            za[i][0] += wij * a[j][0];
            za[i][1] += wij * a[j][1];
            zb[i] += wij * b[j];
        }
    }
    match act {
        Activation::Identity => descend(layers, k + 1, poly, za, zb, out),
        Activation::Relu => split(layers, k, 0, poly, za, zb, out),
    }
}

/// Fixes the phase of neurons `i..` of layer `k`.
fn split(
    layers: &[(Vec<f64>, usize, usize, Vec<f64>, Activation)],
    k: usize,
    i: usize,
    poly: Vec<Point>,
    a: Vec<[f64; 2]>,
    b: Vec<f64>,
    out: &mut Vec<Piece>,
) {
    if i == a.len() {
        descend(layers, k + 1, poly, a, b, out);
        return;
    }
    let pos = clip(&poly, a[i], b[i]);
    let neg = clip(&poly, [-a[i][0], -a[i][1]], -b[i]);
    if !pos.is_empty() {
        split(layers, k, i + 1, pos, a.clone(), b.clone(), out);
    }
    if !neg.is_empty() {
        let (mut a0, mut b0) = (a, b);
        a0[i] = [0.0, 0.0];
        b0[i] = 0.0;
        split(layers, k, i + 1, neg, a0, b0, out);
    }
}

/// Exact support of the reachable set from the region decomposition.
pub fn region_support(pieces: &[Piece], d: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for p in pieces {
        let g = [
            p.a.iter().zip(d).map(|(r, di)| di * r[0]).sum::<f64>(),
            p.a.iter().zip(d).map(|(r, di)| di * r[1]).sum::<f64>(),
        ];
        let off: f64 = p.b.iter().zip(d).map(|(bi, di)| bi * di).sum();
        for v in &p.poly {
            best = best.max(g[0] * v[0] + g[1] * v[1] + off);
        }
    }
    best
}

/// Exact interval hull of the reachable set.
pub fn region_hull(pieces: &[Piece], m: usize) -> IntervalVector {
    let pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            let hi = region_support(pieces, &e);
            e[i] = -1.0;
            (-region_support(pieces, &e), hi)
        })
        .collect();
    IntervalVector::from_pairs(&pairs).unwrap()
}

/// Sanity check of the decomposition: piece maps agree with inference at
/// every vertex.
pub fn check_regions(net: &Network, pieces: &[Piece]) {
    for p in pieces {
        for v in &p.poly {
            let y = infer(net, v).unwrap();
            for (i, yi) in y.iter().enumerate() {
                let z = p.a[i][0] * v[0] + p.a[i][1] * v[1] + p.b[i];
                assert!((z - yi).abs() < 1e-9, "piece map disagrees with inference");
            }
        }
    }
}

pub fn random_direction(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dense_affine(d: &Dense, a: &[f64], bias: &[f64]) -> Vec<f64> {
    let (m, n) = (d.outputs(), d.inputs());
    let w = sparse::to_dense(&d.weights);
    (0..m).map(|i| bias[i] + (0..n).map(|j| w[i * n + j] * a[j]).sum::<f64>()).collect()
}

/// Pre- and post-activation values of every layer, by dense multiplication.
/// Interval biases contribute their lower end.
pub fn trajectory(net: &Network, x: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut a = x.to_vec();
    let mut out = Vec::new();
    for d in net.dense_layers().unwrap() {
        let z = dense_affine(d, &a, d.bias.lower());
        a = z.iter().map(|&v| d.activation.apply(v)).collect();
        out.push((z, a.clone()));
    }
    out
}

/// Whether the original network's trajectory at `x` is one of the reduced
/// network's trajectories: at every layer, the kept pre-activations minus
/// the reduced affine part of the kept previous activations must lie in the
/// reduced interval bias. `kept[k]` lists the original indices kept in
/// hidden layer `k`.
pub fn trajectory_fits(orig: &Network, reduced: &Network, kept: &[Vec<usize>], x: &[f64], tol: f64) -> bool {
    let traj = trajectory(orig, x);
    let layers = reduced.dense_layers().unwrap();
    let mut prev: Vec<f64> = x.to_vec();
    for (k, d) in layers.iter().enumerate() {
        let rows: Vec<usize> = match kept.get(k) {
            Some(r) => r.clone(),
            None => (0..d.outputs()).collect(),
        };
        let zero = vec![0.0; d.outputs()];
        let part = dense_affine(d, &prev, &zero);
        for (r, &i) in rows.iter().enumerate() {
            let (l, u) = d.bias.get(r);
            let b = traj[k].0[i] - part[r];
            if b < l - tol || b > u + tol {
                return false;
            }
        }
        prev = rows.iter().map(|&i| traj[k].1[i]).collect();
    }
    true
}
