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

//! Random hybrid zonotopes built around a known feasible factor assignment.

use hzreach::sparse;
use hzreach::HybridZonotope;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Built {
    pub z: HybridZonotope,
    pub xi_c: Vec<f64>,
    pub xi_b: Vec<f64>,
}

fn q(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo..hi) * 16.0).round() / 16.0
}

/// Nonempty random set with `nc < ng` constraints; the constraint rows are
/// generated densely so they have full row rank almost surely.
pub fn random_hz(rng: &mut ChaCha8Rng, n: usize, ng: usize, nb: usize, nc: usize) -> Built {
    assert!(nc < ng.max(1));
    let gc: Vec<f64> = (0..n * ng).map(|_| q(rng, -1.0, 1.0)).collect();
    let gb: Vec<f64> = (0..n * nb).map(|_| q(rng, -1.0, 1.0)).collect();
    let ac: Vec<f64> = (0..nc * ng).map(|_| q(rng, -1.0, 1.0)).collect();
    let ab: Vec<f64> = (0..nc * nb).map(|_| q(rng, -1.0, 1.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| q(rng, -1.0, 1.0)).collect();
    let xi_c: Vec<f64> = (0..ng).map(|_| rng.gen_range(-0.9..0.9)).collect();
    let xi_b: Vec<f64> = (0..nb).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let b: Vec<f64> = (0..nc)
        .map(|i| {
            (0..ng).map(|j| ac[i * ng + j] * xi_c[j]).sum::<f64>()
                + (0..nb).map(|j| ab[i * nb + j] * xi_b[j]).sum::<f64>()
        })
        .collect();
    let z = HybridZonotope::new(
        c,
        sparse::from_dense(n, ng, &gc),
        sparse::from_dense(n, nb, &gb),
        sparse::from_dense(nc, ng, &ac),
        sparse::from_dense(nc, nb, &ab),
        b,
    )
    .unwrap();
    Built { z, xi_c, xi_b }
}

/// Support of a hybrid zonotope by enumerating binary patterns and the
/// vertices of each continuous slice. `None` when empty.
pub fn support_by_enumeration(z: &HybridZonotope, d: &[f64]) -> Option<f64> {
    let (n, ng, nb, nc) = (z.dim(), z.num_cont(), z.num_bin(), z.num_cons());
    let gc = sparse::to_dense(z.cont_gens());
    let gb = sparse::to_dense(z.bin_gens());
    let ac = sparse::to_dense(z.con_cont());
    let ab = sparse::to_dense(z.con_bin());
    let obj: Vec<f64> = (0..ng)
        .map(|j| -(0..n).map(|i| d[i] * gc[i * ng + j]).sum::<f64>())
        .collect();
    let dc: f64 = d.iter().zip(z.center()).map(|(a, b)| a * b).sum();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << nb) {
        let xb: Vec<f64> = (0..nb).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
        let rhs: Vec<f64> = (0..nc)
            .map(|i| z.con_rhs()[i] - (0..nb).map(|j| ab[i * nb + j] * xb[j]).sum::<f64>())
            .collect();
        let Some(m) = super::linalg::lp_min_by_vertices(
            &obj,
            &ac,
            &rhs,
            &vec![-1.0; ng],
            &vec![1.0; ng],
            1e-9,
        ) else {
            continue;
        };
        let db: f64 = (0..n)
            .map(|i| d[i] * (0..nb).map(|j| gb[i * nb + j] * xb[j]).sum::<f64>())
            .sum();
        let v = dc + db - m;
        best = Some(best.map_or(v, |b: f64| b.max(v)));
    }
    best
}
