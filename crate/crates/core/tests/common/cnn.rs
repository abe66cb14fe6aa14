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

//! Direct-evaluation oracles for convolution and pooling on explicitly
//! zero-padded arrays, plus random layer configurations.

use hzreach::model::{Conv, Layer, Shape, TensorShape, Window};
use hzreach::{sparse, Activation, Dense, Network};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `c × (h + 2ph) × (w + 2pw)` copy with the input placed at `(ph, pw)`.
pub fn zero_pad(x: &[f64], s: TensorShape, ph: usize, pw: usize) -> Vec<f64> {
    let (hp, wp) = (s.height + 2 * ph, s.width + 2 * pw);
    let mut out = vec![0.0; s.channels * hp * wp];
    for c in 0..s.channels {
        for h in 0..s.height {
            for w in 0..s.width {
                out[(c * hp + h + ph) * wp + w + pw] = x[(c * s.height + h) * s.width + w];
            }
        }
    }
    out
}

pub fn out_dim(x: usize, k: usize, p: usize, s: usize) -> usize {
    (x + p + s - k) / s
}

/// Applies `f` to the `k_h × k_w` window values of every output cell of
/// every channel. Returns `(values, out_h, out_w)`.
fn windows(x: &[f64], s: TensorShape, win: &Window, mut f: impl FnMut(usize, &[f64]) -> f64, channels_out: usize) -> (Vec<f64>, usize, usize) {
    let (ph, pw) = win.padding;
    let padded = zero_pad(x, s, ph, pw);
    let (hp, wp) = (s.height + 2 * ph, s.width + 2 * pw);
    let hy = out_dim(s.height, win.height, ph, win.stride.0);
    let wy = out_dim(s.width, win.width, pw, win.stride.1);
    let mut out = Vec::new();
    for oc in 0..channels_out {
        for oh in 0..hy {
            for ow in 0..wy {
                let mut vals = Vec::new();
                for c in 0..s.channels {
                    for kh in 0..win.height {
                        for kw in 0..win.width {
                            vals.push(padded[(c * hp + oh * win.stride.0 + kh) * wp + ow * win.stride.1 + kw]);
                        }
                    }
                }
                out.push(f(oc, &vals));
            }
        }
    }
    (out, hy, wy)
}

pub fn conv_oracle(conv: &Conv, x: &[f64], s: TensorShape) -> Vec<f64> {
    let per = conv.in_channels * conv.window.height * conv.window.width;
    windows(
        x,
        s,
        &conv.window,
        |f, vals| {
            let w = &conv.weights[f * per..(f + 1) * per];
            let z = conv.bias[f] + w.iter().zip(vals).map(|(a, b)| a * b).sum::<f64>();
            match conv.activation {
                Activation::Relu => z.max(0.0),
                Activation::Identity => z,
            }
        },
        conv.filters,
    )
    .0
}

/// Per-channel pooling: runs the window reducer channel by channel.
fn pool_oracle(win: &Window, x: &[f64], s: TensorShape, reduce: fn(&[f64]) -> f64) -> Vec<f64> {
    let one = TensorShape::new(1, s.height, s.width);
    let plane = s.height * s.width;
    (0..s.channels)
        .flat_map(|c| windows(&x[c * plane..(c + 1) * plane], one, win, |_, v| reduce(v), 1).0)
        .collect()
}

pub fn avgpool_oracle(win: &Window, x: &[f64], s: TensorShape) -> Vec<f64> {
    pool_oracle(win, x, s, |v| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn maxpool_oracle(win: &Window, x: &[f64], s: TensorShape) -> Vec<f64> {
    pool_oracle(win, x, s, |v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Random window that leaves at least one output cell over `h × w`.
pub fn random_window(rng: &mut ChaCha8Rng, h: usize, w: usize, max_k: usize) -> Window {
    loop {
        let kh = rng.gen_range(1..=max_k.min(h + 2));
        let kw = rng.gen_range(1..=max_k.min(w + 2));
        let p = (rng.gen_range(0..=2), rng.gen_range(0..=2));
        let s = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        if h + p.0 + s.0 >= kh + s.0 && w + p.1 + s.1 >= kw + s.1 {
            return Window::new(kh, kw, p, s);
        }
    }
}

pub fn random_conv(rng: &mut ChaCha8Rng, input: TensorShape, filters: usize) -> Conv {
    let window = random_window(rng, input.height, input.width, 4);
    random_conv_with(rng, input, filters, window)
}

pub fn random_conv_with(rng: &mut ChaCha8Rng, input: TensorShape, filters: usize, window: Window) -> Conv {
    let n = filters * input.channels * window.height * window.width;
    Conv {
        filters,
        in_channels: input.channels,
        window,
        weights: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        bias: (0..filters).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        activation: if rng.gen_bool(0.5) { Activation::Relu } else { Activation::Identity },
    }
}

/// Conv 3×3 (ReLU) → max-pool 2×2 stride 2 → fully connected (Identity).
pub fn small_cnn(rng: &mut ChaCha8Rng, input: TensorShape, filters: usize, classes: usize) -> Network {
    let conv = Conv {
        activation: Activation::Relu,
        ..random_conv_with(rng, input, filters, Window::new(3, 3, (0, 0), (1, 1)))
    };
    let pool = Window::new(2, 2, (0, 0), (2, 2));
    let (h, w) = (input.height - 2, input.width - 2);
    let n = filters * (h / 2) * (w / 2);
    let scale = 1.5 / (n as f64).sqrt();
    let weights: Vec<f64> = (0..classes * n).map(|_| rng.gen_range(-scale..scale)).collect();
    let bias: Vec<f64> = (0..classes).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let fc = Dense::with_point_bias(sparse::from_dense(classes, n, &weights), &bias, Activation::Identity).unwrap();
    Network::new(
        Shape::Tensor(input),
        vec![Layer::Conv(conv), Layer::MaxPool(pool), Layer::FullyConnected(fc)],
    )
    .unwrap()
}
