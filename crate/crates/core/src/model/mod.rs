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

//! Network and tensor data model.
//!
//! Tensors are `channels × height × width` and flatten in row-major order:
//! entry `(c, h, w)` (zero-based) sits at `c·H·W + h·W + w`. Window geometry
//! follows the convention where the output height of a window of size `k`,
//! padding `p` and stride `s` over `H` rows is `⌊(H − k + p + s) / s⌋` and
//! output row `i` reads input rows `i·s − p .. i·s − p + k`; out-of-range rows
//! read as zero.

mod forward;
pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalVector;
use crate::sparse::SparseMatrix;

pub use forward::{forward_avgpool, forward_conv, forward_fc, forward_maxpool, forward_maxout, infer, infer_tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Shape(format!(
                "tensor dimensions must be positive, got {channels}x{height}x{width}"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::dims("tensor data", channels * height * width, data.len()));
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(channels, height, width, vec![0.0; channels * height * width])
    }

    /// Inverse of [`Tensor3::flatten`].
    pub fn from_flat(shape: TensorShape, data: &[f64]) -> Result<Self> {
        Self::new(shape.channels, shape.height, shape.width, data.to_vec())
    }

    pub fn shape(&self) -> TensorShape {
        TensorShape::new(self.channels, self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn index(&self, c: usize, h: usize, w: usize) -> usize {
        (c * self.height + h) * self.width + w
    }

    #[inline]
    pub fn get(&self, c: usize, h: usize, w: usize) -> f64 {
        self.data[self.index(c, h, w)]
    }

    /// Value at a possibly out-of-range position; zero outside.
    #[inline]
    pub fn get_padded(&self, c: usize, h: isize, w: isize) -> f64 {
        if h < 0 || w < 0 || h as usize >= self.height || w as usize >= self.width {
            0.0
        } else {
            self.get(c, h as usize, w as usize)
        }
    }

    pub fn set(&mut self, c: usize, h: usize, w: usize, v: f64) {
        let i = self.index(c, h, w);
        self.data[i] = v;
    }

    pub fn flatten(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// One CSV block per channel: `channel,row,v0,...,v{w-1}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel,row");
        for w in 0..self.width {
            out.push_str(&format!(",c{w}"));
        }
        out.push('\n');
        for c in 0..self.channels {
            for h in 0..self.height {
                out.push_str(&format!("{c},{h}"));
                for w in 0..self.width {
                    out.push_str(&format!(",{}", self.get(c, h, w)));
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl TensorShape {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width }
    }

    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Input or output shape of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Vector(usize),
    Tensor(TensorShape),
}

impl Shape {
    pub fn len(&self) -> usize {
        match self {
            Shape::Vector(n) => *n,
            Shape::Tensor(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tensor(&self) -> Option<TensorShape> {
        match self {
            Shape::Tensor(t) => Some(*t),
            Shape::Vector(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
        }
    }

    pub fn apply_interval(self, j: &IntervalVector) -> IntervalVector {
        match self {
            Activation::Relu => j.relu(),
            Activation::Identity => j.clone(),
        }
    }
}

/// `σ(W x + v)` with a possibly interval-valued bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: SparseMatrix,
    pub bias: IntervalVector,
    pub activation: Activation,
}

impl Dense {
    pub fn new(weights: SparseMatrix, bias: IntervalVector, activation: Activation) -> Result<Self> {
        if weights.rows() != bias.len() {
            return Err(Error::dims("dense bias", weights.rows(), bias.len()));
        }
        Ok(Self { weights, bias, activation })
    }

    /// Point bias from a vector.
    pub fn with_point_bias(weights: SparseMatrix, bias: &[f64], activation: Activation) -> Result<Self> {
        Self::new(weights, IntervalVector::point(bias), activation)
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }
}

/// Window geometry shared by convolutions and pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub height: usize,
    pub width: usize,
    pub padding: (usize, usize),
    pub stride: (usize, usize),
}

impl Window {
    pub fn new(height: usize, width: usize, padding: (usize, usize), stride: (usize, usize)) -> Self {
        Self { height, width, padding, stride }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::Shape("window dimensions must be ≥ 1".into()));
        }
        if self.stride.0 == 0 || self.stride.1 == 0 {
            return Err(Error::Shape("strides must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Output `(height, width)` over an input of `(h, w)`; rejects sizes below one.
    pub fn output_size(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        self.validate()?;
        let dim = |x: usize, k: usize, p: usize, s: usize| -> Result<usize> {
            let num = x as isize - k as isize + p as isize + s as isize;
            let out = num.div_euclid(s as isize);
            if out < 1 {
                Err(Error::Shape(format!(
                    "window {k} with padding {p} and stride {s} leaves no output over {x} cells"
                )))
            } else {
                Ok(out as usize)
            }
        };
        Ok((
            dim(h, self.height, self.padding.0, self.stride.0)?,
            dim(w, self.width, self.padding.1, self.stride.1)?,
        ))
    }
}

/// Convolution with `filters × in_channels × window.height × window.width`
/// weights stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv {
    pub filters: usize,
    pub in_channels: usize,
    pub window: Window,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Conv {
    #[inline]
    pub fn weight(&self, f: usize, c: usize, kh: usize, kw: usize) -> f64 {
        self.weights[((f * self.in_channels + c) * self.window.height + kh) * self.window.width + kw]
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        let n = self.filters * self.in_channels * self.window.height * self.window.width;
        if self.filters == 0 || self.in_channels == 0 {
            return Err(Error::Shape("convolution needs ≥ 1 filter and channel".into()));
        }
        if self.weights.len() != n {
            return Err(Error::dims("convolution weights", n, self.weights.len()));
        }
        if self.bias.len() != self.filters {
            return Err(Error::dims("convolution bias", self.filters, self.bias.len()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    FullyConnected(Dense),
    Conv(Conv),
    AvgPool(Window),
    MaxPool(Window),
    /// Maximum over consecutive groups of `group_size` inputs.
    MaxoutGroup { group_size: usize },
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::FullyConnected(_) => "fully_connected",
            Layer::Conv(_) => "conv",
            Layer::AvgPool(_) => "avg_pool",
            Layer::MaxPool(_) => "max_pool",
            Layer::MaxoutGroup { .. } => "maxout_group",
        }
    }

    /// Output shape for the given input shape.
    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let need_tensor = || {
            input.tensor().ok_or_else(|| {
                Error::Shape(format!("{} layer needs a tensor input, got {input:?}", self.kind()))
            })
        };
        match self {
            Layer::FullyConnected(d) => {
                if d.inputs() != input.len() {
                    return Err(Error::dims("fully-connected input", d.inputs(), input.len()));
                }
                Ok(Shape::Vector(d.outputs()))
            }
            Layer::Conv(c) => {
                c.validate()?;
                let t = need_tensor()?;
                if t.channels != c.in_channels {
                    return Err(Error::dims("convolution input channels", c.in_channels, t.channels));
                }
                let (h, w) = c.window.output_size(t.height, t.width)?;
                Ok(Shape::Tensor(TensorShape::new(c.filters, h, w)))
            }
            Layer::AvgPool(win) | Layer::MaxPool(win) => {
                let t = need_tensor()?;
                let (h, w) = win.output_size(t.height, t.width)?;
                Ok(Shape::Tensor(TensorShape::new(t.channels, h, w)))
            }
            Layer::MaxoutGroup { group_size } => {
                let n = input.len();
                if *group_size == 0 || n % group_size != 0 {
                    return Err(Error::Shape(format!(
                        "maxout group size {group_size} does not divide {n}"
                    )));
                }
                Ok(Shape::Vector(n / group_size))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Shape,
    layers: Vec<Layer>,
}

impl Network {
    /// Checks that every layer accepts its predecessor's output.
    pub fn new(input_shape: Shape, layers: Vec<Layer>) -> Result<Self> {
        if input_shape.is_empty() {
            return Err(Error::Shape("network input must be nonempty".into()));
        }
        let mut shape = input_shape;
        for (k, layer) in layers.iter().enumerate() {
            shape = layer
                .output_shape(shape)
                .map_err(|e| Error::Shape(format!("layer {k} ({}): {e}", layer.kind())))?;
        }
        Ok(Self { input_shape, layers })
    }

    /// Fully-connected network over a vector input.
    pub fn ffnn(layers: Vec<Dense>) -> Result<Self> {
        let n = layers
            .first()
            .map(Dense::inputs)
            .ok_or_else(|| Error::Shape("network needs at least one layer".into()))?;
        Self::new(Shape::Vector(n), layers.into_iter().map(Layer::FullyConnected).collect())
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    /// Input shape of every layer followed by the network output shape.
    pub fn shapes(&self) -> Vec<Shape> {
        let mut out = vec![self.input_shape];
        for layer in &self.layers {
            let next = layer
                .output_shape(*out.last().expect("nonempty"))
                .expect("validated at construction");
            out.push(next);
        }
        out
    }

    pub fn output_len(&self) -> usize {
        self.shapes().last().map_or(0, Shape::len)
    }

    pub fn is_fully_connected(&self) -> bool {
        self.layers.iter().all(|l| matches!(l, Layer::FullyConnected(_)))
    }

    /// The dense layers, if every layer is fully connected.
    pub fn dense_layers(&self) -> Result<Vec<&Dense>> {
        self.layers
            .iter()
            .enumerate()
            .map(|(k, l)| match l {
                Layer::FullyConnected(d) => Ok(d),
                other => Err(Error::UnsupportedLayer(format!(
                    "{} at layer {k}; lower the network first",
                    other.kind()
                ))),
            })
            .collect()
    }

    /// Whether every bias is a point.
    pub fn has_point_biases(&self) -> bool {
        self.layers.iter().all(|l| match l {
            Layer::FullyConnected(d) => d.bias.is_point(),
            _ => true,
        })
    }
}
