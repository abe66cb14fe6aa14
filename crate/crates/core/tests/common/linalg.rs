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

//! Small dense helpers for test oracles. Independent of the crate's solver.

/// Solves the square system `a·x = b` (row-major) by Gaussian elimination with
/// partial pivoting. `None` when the matrix is numerically singular.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut r = b.to_vec();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[piv * n + col].abs() < 1e-10 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            r.swap(piv, col);
        }
        for i in col + 1..n {
            let f = m[i * n + col] / m[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    m[i * n + k] -= f * m[col * n + k];
                }
                r[i] -= f * r[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = r[i];
        for k in i + 1..n {
            s -= m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum of `c·x` over `{A x = b, l ≤ x ≤ u}` by enumerating every basic
/// solution. `A` is `m × n` row-major with full row rank. `None` if empty.
pub fn lp_min_by_vertices(
    c: &[f64],
    a: &[f64],
    b: &[f64],
    l: &[f64],
    u: &[f64],
    tol: f64,
) -> Option<f64> {
    let n = c.len();
    let m = b.len();
    let mut best: Option<f64> = None;
    for basis in subsets(n, m) {
        let nonbasic: Vec<usize> = (0..n).filter(|j| !basis.contains(j)).collect();
        let mut ab = vec![0.0; m * m];
        for i in 0..m {
            for (k, &j) in basis.iter().enumerate() {
                ab[i * m + k] = a[i * n + j];
            }
        }
        for mask in 0u32..(1 << nonbasic.len()) {
            let mut x = vec![0.0; n];
            for (k, &j) in nonbasic.iter().enumerate() {
                x[j] = if mask >> k & 1 == 1 { u[j] } else { l[j] };
            }
            let rhs: Vec<f64> = (0..m)
                .map(|i| b[i] - nonbasic.iter().map(|&j| a[i * n + j] * x[j]).sum::<f64>())
                .collect();
            let Some(xb) = solve(&ab, &rhs, m) else {
                continue;
            };
            for (k, &j) in basis.iter().enumerate() {
                x[j] = xb[k];
            }
            if (0..n).all(|j| x[j] >= l[j] - tol && x[j] <= u[j] + tol) {
                let v: f64 = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    }
    best
}
