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


mod common;

use common::cnn::{avgpool_oracle, conv_oracle, maxpool_oracle, random_conv, random_conv_with, random_window, zero_pad};
use hzreach::lowering::{
    build_avgpool_matrix, build_conv_matrix, build_maxpool_selectors, build_pad_matrix, lower_avgpool, lower_conv,
    lower_maxpool, lower_network,
};
use hzreach::model::{infer, Conv, Shape, TensorShape, Window};
use hzreach::{sparse, Activation, Dense, Error, Layer, Network};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pool(k: usize, p: usize, s: usize) -> Window {
    Window::new(k, k, (p, p), (s, s))
}

fn grid3() -> Vec<f64> {
    (1..=9).map(f64::from).collect()
}

fn run(layers: &[Dense], x: &[f64]) -> Vec<f64> {
    layers.iter().fold(x.to_vec(), |v, d| hzreach::model::forward_fc(d, &v).unwrap())
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (i, (u, v)) in a.iter().zip(b).enumerate() {
        assert!((u - v).abs() <= tol, "entry {i}: {u} vs {v}");
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

#[test]
fn pad_matrix_without_padding_is_identity() {
    let p = build_pad_matrix(2, 3, 4, 0, 0);
    assert_eq!(sparse::to_dense(&p), sparse::to_dense(&sparse::identity(24)));
}

#[test]
fn pad_matrix_places_first_pixel() {
    let p = build_pad_matrix(1, 2, 2, 1, 1);
    assert_eq!((p.rows(), p.cols()), (16, 4));
    // first pixel sits at slot 6 of the 4×4 padded grid, counting from one
    let col0: Vec<(usize, usize, f64)> = sparse::entries(&p).into_iter().filter(|e| e.1 == 0).collect();
    assert_eq!(col0, vec![(5, 0, 1.0)]);
    let x = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(sparse::mul_vec(&p, &x), zero_pad(&x, TensorShape::new(1, 2, 2), 1, 1));
}

#[test]
fn pad_matrix_matches_pad_then_flatten() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let s = TensorShape::new(rng.gen_range(1..4), rng.gen_range(1..7), rng.gen_range(1..7));
        let (ph, pw) = (rng.gen_range(0..3), rng.gen_range(0..3));
        let p = build_pad_matrix(s.channels, s.height, s.width, ph, pw);
        assert_eq!(p.nnz(), s.len());
        assert!(sparse::entries(&p).iter().all(|e| e.2 == 1.0));
        let x = random_vec(&mut rng, s.len());
        assert_eq!(sparse::mul_vec(&p, &x), zero_pad(&x, s, ph, pw));
    }
}

#[test]
fn unit_filter_gives_scaled_selector() {
    let conv = Conv {
        filters: 1,
        in_channels: 1,
        window: pool(1, 0, 1),
        weights: vec![2.5],
        bias: vec![0.0],
        activation: Activation::Identity,
    };
    let m = build_conv_matrix(&conv, TensorShape::new(1, 3, 4)).unwrap();
    assert_eq!((m.rows(), m.cols()), (12, 12));
    for r in 0..12 {
        let row = m.outer_view(r).unwrap();
        assert_eq!(row.nnz(), 1);
        assert_eq!(row.iter().next().unwrap(), (r, &2.5));
    }
}

fn toy_conv() -> Conv {
    Conv {
        filters: 1,
        in_channels: 1,
        window: pool(2, 0, 1),
        weights: vec![1.0, 0.0, 0.0, 1.0],
        bias: vec![0.0],
        activation: Activation::Relu,
    }
}

#[test]
fn toy_convolution_lowers_exactly() {
    let d = lower_conv(&toy_conv(), TensorShape::new(1, 3, 3)).unwrap();
    assert_eq!(hzreach::model::forward_fc(&d, &grid3()).unwrap(), vec![6.0, 8.0, 12.0, 14.0]);
}

#[test]
fn stride_two_halves_rows() {
    let s = TensorShape::new(1, 8, 8);
    let mut conv = toy_conv();
    let m1 = build_conv_matrix(&conv, s).unwrap();
    conv.window = Window::new(2, 2, (0, 0), (2, 2));
    let m2 = build_conv_matrix(&conv, s).unwrap();
    assert_eq!(m1.rows(), 49);
    assert_eq!(m2.rows(), 16);
    conv.window = Window::new(2, 2, (0, 0), (2, 1));
    assert_eq!(build_conv_matrix(&conv, s).unwrap().rows(), 4 * 7);
}

#[test]
fn zero_filter_yields_activated_bias() {
    let s = TensorShape::new(2, 4, 4);
    let conv = Conv {
        filters: 2,
        in_channels: 2,
        window: pool(3, 1, 1),
        weights: vec![0.0; 2 * 2 * 9],
        bias: vec![0.75, -0.5],
        activation: Activation::Relu,
    };
    let d = lower_conv(&conv, s).unwrap();
    let y = hzreach::model::forward_fc(&d, &random_vec(&mut ChaCha8Rng::seed_from_u64(3), 32)).unwrap();
    let (hy, wy) = conv.window.output_size(4, 4).unwrap();
    let mut want = vec![0.75; hy * wy];
    want.extend(vec![0.0; hy * wy]);
    assert_eq!(y, want);
}

#[test]
fn multichannel_convolution_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = TensorShape::new(2, 7, 6);
    let mut checked = 0;
    for _ in 0..5 {
        let conv = random_conv(&mut rng, s, 3);
        let wc = build_conv_matrix(&conv, s).unwrap();
        let (hy, wy) = conv.window.output_size(s.height, s.width).unwrap();
        assert_eq!(wc.rows(), 3 * hy * wy);
        assert!(wc.nnz() <= 3 * hy * wy * 2 * conv.window.height * conv.window.width);
        let d = lower_conv(&conv, s).unwrap();
        for _ in 0..200 {
            let x = random_vec(&mut rng, s.len());
            assert_close(&hzreach::model::forward_fc(&d, &x).unwrap(), &conv_oracle(&conv, &x, s), 1e-9);
            checked += 1;
        }
    }
    assert_eq!(checked, 1000);
}

#[test]
fn avgpool_examples() {
    let s = TensorShape::new(1, 3, 3);
    let d = lower_avgpool(&pool(2, 0, 1), s).unwrap();
    assert_eq!(d.activation, Activation::Identity);
    assert_eq!(hzreach::model::forward_fc(&d, &grid3()).unwrap()[0], 3.0);
    let one = lower_avgpool(&pool(1, 0, 1), TensorShape::new(2, 3, 3)).unwrap();
    assert_eq!(sparse::to_dense(&one.weights), sparse::to_dense(&sparse::identity(18)));
}

#[test]
fn avgpool_row_sums_count_cells_inside_the_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let s = TensorShape::new(rng.gen_range(1..3), rng.gen_range(1..7), rng.gen_range(1..7));
        let win = random_window(&mut rng, s.height, s.width, 4);
        let d = lower_avgpool(&win, s).unwrap();
        let (hy, wy) = win.output_size(s.height, s.width).unwrap();
        let area = (win.height * win.width) as f64;
        let sums = sparse::row_abs_sums(&d.weights);
        for c in 0..s.channels {
            for oh in 0..hy {
                for ow in 0..wy {
                    let inside = (0..win.height)
                        .flat_map(|kh| (0..win.width).map(move |kw| (kh, kw)))
                        .filter(|&(kh, kw)| {
                            let r = (oh * win.stride.0 + kh) as isize - win.padding.0 as isize;
                            let q = (ow * win.stride.1 + kw) as isize - win.padding.1 as isize;
                            (0..s.height as isize).contains(&r) && (0..s.width as isize).contains(&q)
                        })
                        .count();
                    let got = sums[(c * hy + oh) * wy + ow];
                    assert!((got - inside as f64 / area).abs() < 1e-12);
                    assert!(got <= 1.0 + 1e-12);
                }
            }
        }
        let x = random_vec(&mut rng, s.len());
        assert_close(&hzreach::model::forward_fc(&d, &x).unwrap(), &avgpool_oracle(&win, &x, s), 1e-9);
    }
}

#[test]
fn maxpool_selectors_pick_single_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let s = TensorShape::new(rng.gen_range(1..3), rng.gen_range(1..6), rng.gen_range(1..6));
        let win = random_window(&mut rng, s.height, s.width, 3);
        let sel = build_maxpool_selectors(&win, s).unwrap();
        let (hy, wy) = win.output_size(s.height, s.width).unwrap();
        assert_eq!(sel.len(), s.channels * hy * wy);
        let p = build_pad_matrix(s.channels, s.height, s.width, win.padding.0, win.padding.1);
        let x = random_vec(&mut rng, s.len());
        let padded = sparse::mul_vec(&p, &x);
        let mut direct = Vec::new();
        for m in &sel {
            assert_eq!(m.rows(), win.height * win.width);
            for r in 0..m.rows() {
                let row = m.outer_view(r).unwrap();
                assert_eq!(row.nnz(), 1);
                assert_eq!(*row.iter().next().unwrap().1, 1.0);
            }
            direct.push(sparse::mul_vec(m, &padded).into_iter().fold(f64::NEG_INFINITY, f64::max));
        }
        assert_eq!(direct, maxpool_oracle(&win, &x, s));
    }
}

#[test]
fn pairwise_max_identity() {
    let layers = lower_maxpool(&Window::new(1, 2, (0, 0), (1, 1)), TensorShape::new(1, 1, 2)).unwrap();
    assert_eq!(layers.len(), 2);
    assert_eq!(run(&layers, &[3.0, -1.0]), vec![3.0]);
    assert_eq!(run(&layers, &[-1.0, 3.0]), vec![3.0]);
}

#[test]
fn maxpool_window_of_one_passes_through() {
    let layers = lower_maxpool(&pool(1, 0, 1), TensorShape::new(2, 2, 3)).unwrap();
    assert_eq!(layers.len(), 1);
    assert_eq!(layers[0].activation, Activation::Identity);
    assert_eq!(sparse::to_dense(&layers[0].weights), sparse::to_dense(&sparse::identity(12)));
}

#[test]
fn toy_maxpool_lowers_exactly() {
    let layers = lower_maxpool(&pool(2, 0, 1), TensorShape::new(1, 3, 3)).unwrap();
    // four cells per window: two ReLU stages then the combination
    assert_eq!(layers.len(), 3);
    assert_eq!(run(&layers, &grid3()), vec![5.0, 6.0, 8.0, 9.0]);
}

#[test]
fn maxpool_tree_depth_and_random_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..40 {
        let s = TensorShape::new(rng.gen_range(1..3), rng.gen_range(1..7), rng.gen_range(1..7));
        let win = random_window(&mut rng, s.height, s.width, 4);
        let layers = lower_maxpool(&win, s).unwrap();
        let cells = win.height * win.width;
        let depth = (usize::BITS - (cells - 1).leading_zeros()) as usize;
        assert_eq!(layers.len(), depth + 1, "window {cells}");
        assert!(layers[..depth].iter().all(|d| d.activation == Activation::Relu));
        for _ in 0..20 {
            let x = random_vec(&mut rng, s.len());
            assert_close(&run(&layers, &x), &maxpool_oracle(&win, &x, s), 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn maxpool_tree_ignores_window_order(vals in prop::collection::vec(-10.0f64..10.0, 1..10), seed in any::<u64>()) {
        let n = vals.len();
        let layers = lower_maxpool(&Window::new(1, n, (0, 0), (1, 1)), TensorShape::new(1, 1, n)).unwrap();
        let mut shuffled = vals.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        let want = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let a = run(&layers, &vals)[0];
        let b = run(&layers, &shuffled)[0];
        prop_assert!((a - want).abs() < 1e-12);
        prop_assert!((b - want).abs() < 1e-12);
    }
}

#[test]
fn fully_connected_network_is_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let layers: Vec<Dense> = [(4, 3), (2, 4)]
        .iter()
        .map(|&(m, n)| {
            let w = random_vec(&mut rng, m * n);
            Dense::with_point_bias(sparse::from_dense(m, n, &w), &random_vec(&mut rng, m), Activation::Relu).unwrap()
        })
        .collect();
    let net = Network::ffnn(layers.clone()).unwrap();
    let lowered = lower_network(&net).unwrap();
    let got = lowered.network.dense_layers().unwrap();
    assert_eq!(got.len(), 2);
    for (a, b) in got.iter().zip(&layers) {
        assert_eq!(*a, b);
    }
    assert_eq!(lowered.provenance.entries.len(), 2);
    assert_eq!(lowered.provenance.entries[1].lowered, 1..2);
}

fn check_equivalence(net: &Network, inputs: usize, seed: u64) {
    let lowered = lower_network(net).unwrap();
    assert!(lowered.network.is_fully_connected());
    assert_eq!(lowered.network.input_shape(), net.input_shape());
    assert_eq!(lowered.network.output_len(), net.output_len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..inputs {
        let x: Vec<f64> = (0..net.input_len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        assert_close(&infer(&lowered.network, &x).unwrap(), &infer(net, &x).unwrap(), 1e-9);
    }
}

#[test]
fn small_cnn_lowers_to_equivalent_network() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let s = TensorShape::new(1, 6, 6);
    let conv = Conv { activation: Activation::Relu, ..random_conv_with(&mut rng, s, 2, pool(3, 0, 1)) };
    let w = random_vec(&mut rng, 3 * 8);
    let fc = Dense::with_point_bias(sparse::from_dense(3, 8, &w), &[0.1, 0.0, -0.1], Activation::Identity).unwrap();
    let net = Network::new(
        Shape::Tensor(s),
        vec![Layer::Conv(conv), Layer::MaxPool(pool(2, 0, 2)), Layer::FullyConnected(fc)],
    )
    .unwrap();
    check_equivalence(&net, 1000, 17);
    let prov = lower_network(&net).unwrap().provenance;
    let ranges: Vec<_> = prov.entries.iter().map(|e| e.lowered.clone()).collect();
    assert_eq!(ranges, vec![0..1, 1..4, 4..5]);
    assert_eq!(prov.entries[1].kind, "max_pool");
}

#[test]
fn mnist_shaped_cnn_lowers_to_equivalent_network() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let s = TensorShape::new(1, 28, 28);
    let c1 = Conv { activation: Activation::Relu, ..random_conv_with(&mut rng, s, 4, Window::new(5, 5, (0, 0), (2, 2))) };
    // 28 → 12
    let s2 = TensorShape::new(4, 12, 12);
    let c2 = Conv { activation: Activation::Relu, ..random_conv_with(&mut rng, s2, 3, pool(3, 1, 1)) };
    // 12 → 11 with top-left padding only, then avg 11 → 5, max 5 → 2
    let w = random_vec(&mut rng, 10 * 3 * 2 * 2);
    let fc = Dense::with_point_bias(sparse::from_dense(10, 12, &w), &random_vec(&mut rng, 10), Activation::Identity).unwrap();
    let net = Network::new(
        Shape::Tensor(s),
        vec![
            Layer::Conv(c1),
            Layer::Conv(c2),
            Layer::AvgPool(pool(2, 0, 2)),
            Layer::MaxPool(pool(3, 1, 2)),
            Layer::FullyConnected(fc),
        ],
    )
    .unwrap();
    check_equivalence(&net, 100, 19);
}

#[test]
fn maxout_is_not_lowered() {
    let net = Network::new(Shape::Vector(4), vec![Layer::MaxoutGroup { group_size: 2 }]).unwrap();
    assert!(matches!(lower_network(&net), Err(Error::UnsupportedLayer(_))));
}

#[test]
fn matrices_for_invalid_windows_fail() {
    assert!(build_avgpool_matrix(&pool(5, 0, 1), TensorShape::new(1, 3, 3)).is_err());
    assert!(build_maxpool_selectors(&pool(4, 0, 1), TensorShape::new(1, 2, 2)).is_err());
}
