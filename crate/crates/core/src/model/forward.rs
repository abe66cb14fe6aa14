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

//! Reference forward passes, evaluated directly from the layer definitions.

use super::{Conv, Dense, Layer, Network, Tensor3, Window};
use crate::error::{Error, Result};
use crate::sparse;

/// `σ(W x + v)`; requires a point bias.
pub fn forward_fc(layer: &Dense, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != layer.inputs() {
        return Err(Error::dims("fully-connected input", layer.inputs(), x.len()));
    }
    if !layer.bias.is_point() {
        return Err(Error::IntervalBias { layer: 0 });
    }
    let wx = sparse::mul_vec(&layer.weights, x);
    Ok(wx
        .iter()
        .zip(layer.bias.lower())
        .map(|(a, b)| layer.activation.apply(a + b))
        .collect())
}

/// Top-left input coordinate of output cell `(oh, ow)`, possibly negative.
#[inline]
fn origin(win: &Window, oh: usize, ow: usize) -> (isize, isize) {
    (
        (oh * win.stride.0) as isize - win.padding.0 as isize,
        (ow * win.stride.1) as isize - win.padding.1 as isize,
    )
}

pub fn forward_conv(layer: &Conv, x: &Tensor3) -> Result<Tensor3> {
    layer.validate()?;
    if x.channels() != layer.in_channels {
        return Err(Error::dims("convolution input channels", layer.in_channels, x.channels()));
    }
    let win = &layer.window;
    let (h, w) = win.output_size(x.height(), x.width())?;
    let mut y = Tensor3::zeros(layer.filters, h, w)?;
    for f in 0..layer.filters {
        for oh in 0..h {
            for ow in 0..w {
                let (h0, w0) = origin(win, oh, ow);
                let mut acc = layer.bias[f];
                for c in 0..layer.in_channels {
                    for kh in 0..win.height {
                        for kw in 0..win.width {
                            let v = x.get_padded(c, h0 + kh as isize, w0 + kw as isize);
                            acc += layer.weight(f, c, kh, kw) * v;
                        }
                    }
                }
                y.set(f, oh, ow, layer.activation.apply(acc));
            }
        }
    }
    Ok(y)
}

fn pool(win: &Window, x: &Tensor3, reduce: impl Fn(&mut dyn Iterator<Item = f64>) -> f64) -> Result<Tensor3> {
    let (h, w) = win.output_size(x.height(), x.width())?;
    let mut y = Tensor3::zeros(x.channels(), h, w)?;
    for c in 0..x.channels() {
        for oh in 0..h {
            for ow in 0..w {
                let (h0, w0) = origin(win, oh, ow);
                let mut cells = (0..win.height).flat_map(|kh| {
                    (0..win.width).map(move |kw| x.get_padded(c, h0 + kh as isize, w0 + kw as isize))
                });
                y.set(c, oh, ow, reduce(&mut cells));
            }
        }
    }
    Ok(y)
}

/// Window averages; padding cells count as zeros.
pub fn forward_avgpool(win: &Window, x: &Tensor3) -> Result<Tensor3> {
    let denom = (win.height * win.width) as f64;
    pool(win, x, |cells| cells.sum::<f64>() / denom)
}

/// Window maxima; padding cells count as zeros.
pub fn forward_maxpool(win: &Window, x: &Tensor3) -> Result<Tensor3> {
    pool(win, x, |cells| cells.fold(f64::NEG_INFINITY, f64::max))
}

pub fn forward_maxout(group_size: usize, x: &[f64]) -> Result<Vec<f64>> {
    if group_size == 0 || x.len() % group_size != 0 {
        return Err(Error::Shape(format!(
            "maxout group size {group_size} does not divide {}",
            x.len()
        )));
    }
    Ok(x.chunks(group_size)
        .map(|g| g.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Network output for a flattened input.
pub fn infer(network: &Network, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != network.input_len() {
        return Err(Error::dims("network input", network.input_len(), input.len()));
    }
    let shapes = network.shapes();
    let mut x = input.to_vec();
    for (k, layer) in network.layers().iter().enumerate() {
        let as_tensor = |x: &[f64]| {
            let t = shapes[k]
                .tensor()
                .ok_or_else(|| Error::Shape(format!("layer {k} needs a tensor input")))?;
            Tensor3::from_flat(t, x)
        };
        x = match layer {
            Layer::FullyConnected(d) => forward_fc(d, &x).map_err(|e| match e {
                Error::IntervalBias { .. } => Error::IntervalBias { layer: k },
                other => other,
            })?,
            Layer::Conv(c) => forward_conv(c, &as_tensor(&x)?)?.into_flat(),
            Layer::AvgPool(w) => forward_avgpool(w, &as_tensor(&x)?)?.into_flat(),
            Layer::MaxPool(w) => forward_maxpool(w, &as_tensor(&x)?)?.into_flat(),
            Layer::MaxoutGroup { group_size } => forward_maxout(*group_size, &x)?,
        };
    }
    Ok(x)
}

pub fn infer_tensor(network: &Network, input: &Tensor3) -> Result<Vec<f64>> {
    if let Some(t) = network.input_shape().tensor() {
        if t != input.shape() {
            return Err(Error::Shape(format!(
                "network expects {t:?}, got {:?}",
                input.shape()
            )));
        }
    }
    infer(network, input.flatten())
}
