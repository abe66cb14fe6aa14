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

//! Rewriting convolution and pooling layers as fully-connected layers.
//!
//! Every lowered matrix is assembled directly in sparse form from index
//! formulas over the zero-padded, row-major flattened input. The padded
//! tensor has `(H + 2·ph) × (W + 2·pw)` cells per channel; windows only ever
//! reach its top and left margins.
//!
//! Max pooling becomes a balanced tree of ReLU layers built from
//! `max(a, b) = ReLU(a − b) + ReLU(b) − ReLU(−b)`, followed by one identity
//! layer that combines the last stage.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Activation, Conv, Dense, Layer, Network, Shape, TensorShape, Window};
use crate::sparse::{self, SparseMatrix};

fn padded_dims(input: TensorShape, padding: (usize, usize)) -> (usize, usize) {
    (input.height + 2 * padding.0, input.width + 2 * padding.1)
}

/// Maps a flattened tensor to its flattened zero-padded copy.
pub fn build_pad_matrix(cx: usize, hx: usize, wx: usize, ph: usize, pw: usize) -> SparseMatrix {
    let (hp, wp) = (hx + 2 * ph, wx + 2 * pw);
    let mut t = Vec::with_capacity(cx * hx * wx);
    for c in 0..cx {
        for h in 0..hx {
            for w in 0..wx {
                let row = c * hp * wp + ph * wp + h * wp + pw + w;
                let col = (c * hx + h) * wx + w;
                t.push((row, col, 1.0));
            }
        }
    }
    sparse::from_triplets(cx * hp * wp, cx * hx * wx, t)
}

/// Column of the padded input read by window cell `(kh, kw)` of output cell
/// `(oh, ow)` in channel `c`.
#[inline]
fn window_col(c: usize, oh: usize, ow: usize, kh: usize, kw: usize, pad: (usize, usize), win: &Window) -> usize {
    let (hp, wp) = pad;
    c * hp * wp + ow * win.stride.1 + kw + kh * wp + oh * wp * win.stride.0
}

/// Convolution over the padded input.
pub fn build_conv_matrix(conv: &Conv, input: TensorShape) -> Result<SparseMatrix> {
    conv.validate()?;
    if input.channels != conv.in_channels {
        return Err(Error::dims("convolution input channels", conv.in_channels, input.channels));
    }
    let win = &conv.window;
    let (hy, wy) = win.output_size(input.height, input.width)?;
    let pad = padded_dims(input, win.padding);
    let mut t = Vec::new();
    for f in 0..conv.filters {
        for oh in 0..hy {
            for ow in 0..wy {
                let row = (f * hy + oh) * wy + ow;
                for c in 0..conv.in_channels {
                    for kh in 0..win.height {
                        for kw in 0..win.width {
                            t.push((row, window_col(c, oh, ow, kh, kw, pad, win), conv.weight(f, c, kh, kw)));
                        }
                    }
                }
            }
        }
    }
    Ok(sparse::from_triplets(
        conv.filters * hy * wy,
        input.channels * pad.0 * pad.1,
        t,
    ))
}

/// Window averaging over the padded input.
pub fn build_avgpool_matrix(win: &Window, input: TensorShape) -> Result<SparseMatrix> {
    let (hy, wy) = win.output_size(input.height, input.width)?;
    let pad = padded_dims(input, win.padding);
    let v = 1.0 / (win.height * win.width) as f64;
    let mut t = Vec::new();
    for c in 0..input.channels {
        for oh in 0..hy {
            for ow in 0..wy {
                let row = (c * hy + oh) * wy + ow;
                for kh in 0..win.height {
                    for kw in 0..win.width {
                        t.push((row, window_col(c, oh, ow, kh, kw, pad, win), v));
                    }
                }
            }
        }
    }
    Ok(sparse::from_triplets(input.channels * hy * wy, input.channels * pad.0 * pad.1, t))
}

/// One `(window cells) × (padded length)` selector per output cell, in
/// row-major output order.
pub fn build_maxpool_selectors(win: &Window, input: TensorShape) -> Result<Vec<SparseMatrix>> {
    let (hy, wy) = win.output_size(input.height, input.width)?;
    let pad = padded_dims(input, win.padding);
    let cols = input.channels * pad.0 * pad.1;
    let mut out = Vec::with_capacity(input.channels * hy * wy);
    for c in 0..input.channels {
        for oh in 0..hy {
            for ow in 0..wy {
                let t = (0..win.height).flat_map(|kh| {
                    (0..win.width).map(move |kw| (kh * win.width + kw, window_col(c, oh, ow, kh, kw, pad, win), 1.0))
                });
                out.push(sparse::from_triplets(win.height * win.width, cols, t));
            }
        }
    }
    Ok(out)
}

fn tensor_input(shape: Shape, what: &str) -> Result<TensorShape> {
    shape
        .tensor()
        .ok_or_else(|| Error::Shape(format!("{what} needs a tensor input")))
}

pub fn lower_conv(conv: &Conv, input: TensorShape) -> Result<Dense> {
    let wc = build_conv_matrix(conv, input)?;
    let p = build_pad_matrix(input.channels, input.height, input.width, conv.window.padding.0, conv.window.padding.1);
    let (hy, wy) = conv.window.output_size(input.height, input.width)?;
    let bias: Vec<f64> = conv.bias.iter().flat_map(|&b| std::iter::repeat(b).take(hy * wy)).collect();
    Dense::with_point_bias(sparse::mul(&wc, &p), &bias, conv.activation)
}

pub fn lower_avgpool(win: &Window, input: TensorShape) -> Result<Dense> {
    let wap = build_avgpool_matrix(win, input)?;
    let p = build_pad_matrix(input.channels, input.height, input.width, win.padding.0, win.padding.1);
    let w = sparse::mul(&wap, &p);
    let n = w.rows();
    Dense::with_point_bias(w, &vec![0.0; n], Activation::Identity)
}

/// Sparse linear form over the previous layer's outputs.
type Form = Vec<(usize, f64)>;

fn form_rows(rows: &mut Vec<(usize, usize, f64)>, row: usize, form: &Form, sign: f64) {
    rows.extend(form.iter().map(|&(j, v)| (row, j, sign * v)));
}

/// Exact max-pooling as ReLU stages plus a final identity combination.
pub fn lower_maxpool(win: &Window, input: TensorShape) -> Result<Vec<Dense>> {
    let selectors = build_maxpool_selectors(win, input)?;
    let p = build_pad_matrix(input.channels, input.height, input.width, win.padding.0, win.padding.1);
    let mut width = input.len();
    let mut cells: Vec<Vec<Form>> = selectors
        .iter()
        .map(|s| {
            let m = sparse::mul(s, &p);
            (0..m.rows())
                .map(|r| m.outer_view(r).map(|row| row.iter().map(|(j, &v)| (j, v)).collect()).unwrap_or_default())
                .collect()
        })
        .collect();

    let mut layers = Vec::new();
    while cells.first().is_some_and(|ops| ops.len() > 1) {
        let mut t = Vec::new();
        let mut row = 0usize;
        let mut next_cells = Vec::with_capacity(cells.len());
        for ops in &cells {
            let mut next = Vec::with_capacity(ops.len().div_ceil(2));
            for pair in ops.chunks(2) {
                match pair {
                    [a, b] => {
                        // ReLU(a − b), ReLU(b), ReLU(−b)
                        form_rows(&mut t, row, a, 1.0);
                        form_rows(&mut t, row, b, -1.0);
                        form_rows(&mut t, row + 1, b, 1.0);
                        form_rows(&mut t, row + 2, b, -1.0);
                        next.push(vec![(row, 1.0), (row + 1, 1.0), (row + 2, -1.0)]);
                        row += 3;
                    }
                    [c] => {
                        // ReLU(c), ReLU(−c)
                        form_rows(&mut t, row, c, 1.0);
                        form_rows(&mut t, row + 1, c, -1.0);
                        next.push(vec![(row, 1.0), (row + 1, -1.0)]);
                        row += 2;
                    }
                    _ => unreachable!("chunks of two"),
                }
            }
            next_cells.push(next);
        }
        layers.push(Dense::with_point_bias(
            sparse::from_triplets(row, width, t),
            &vec![0.0; row],
            Activation::Relu,
        )?);
        width = row;
        cells = next_cells;
    }

    let mut t = Vec::new();
    for (o, ops) in cells.iter().enumerate() {
        form_rows(&mut t, o, &ops[0], 1.0);
    }
    let n = cells.len();
    layers.push(Dense::with_point_bias(
        sparse::from_triplets(n, width, t),
        &vec![0.0; n],
        Activation::Identity,
    )?);
    Ok(layers)
}

/// Lowered layer range produced for one original layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub original: usize,
    pub kind: String,
    pub lowered: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub entries: Vec<ProvenanceEntry>,
}

#[derive(Debug, Clone)]
pub struct Lowered {
    pub network: Network,
    pub provenance: Provenance,
}

/// Rewrites every layer as fully connected. The input shape is kept.
pub fn lower_network(cnn: &Network) -> Result<Lowered> {
    let shapes = cnn.shapes();
    let mut out: Vec<Layer> = Vec::new();
    let mut entries = Vec::with_capacity(cnn.layers().len());
    for (k, layer) in cnn.layers().iter().enumerate() {
        let start = out.len();
        match layer {
            Layer::FullyConnected(d) => out.push(Layer::FullyConnected(d.clone())),
            Layer::Conv(c) => out.push(Layer::FullyConnected(lower_conv(c, tensor_input(shapes[k], "convolution")?)?)),
            Layer::AvgPool(w) => out.push(Layer::FullyConnected(lower_avgpool(w, tensor_input(shapes[k], "average pooling")?)?)),
            Layer::MaxPool(w) => out.extend(
                lower_maxpool(w, tensor_input(shapes[k], "max pooling")?)?
                    .into_iter()
                    .map(Layer::FullyConnected),
            ),
            Layer::MaxoutGroup { .. } => {
                return Err(Error::UnsupportedLayer(format!("maxout_group at layer {k}")));
            }
        }
        entries.push(ProvenanceEntry {
            original: k,
            kind: layer.kind().into(),
            lowered: start..out.len(),
        });
    }
    Ok(Lowered {
        network: Network::new(cnn.input_shape(), out)?,
        provenance: Provenance { entries },
    })
}
