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

use super::HybridZonotope;
use crate::error::{Error, Result};
use crate::interval::IntervalVector;
use crate::sparse::{self, SparseMatrix};

impl HybridZonotope {
    /// `{R x + t : x ∈ Z}`.
    pub fn affine_map(&self, r: &SparseMatrix, t: &[f64]) -> Result<Self> {
        if r.cols() != self.dim() {
            return Err(Error::dims("affine map columns", self.dim(), r.cols()));
        }
        if t.len() != r.rows() {
            return Err(Error::dims("affine map offset", r.rows(), t.len()));
        }
        let rc = sparse::mul_vec(r, &self.center);
        Ok(Self::from_parts(
            rc.iter().zip(t).map(|(a, b)| a + b).collect(),
            sparse::mul(r, &self.cont_gens),
            sparse::mul(r, &self.bin_gens),
            self.con_cont.clone(),
            self.con_bin.clone(),
            self.con_rhs.clone(),
        ))
    }

    /// Keeps the listed coordinates, in order.
    pub fn project(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.dim()) {
            return Err(Error::InvalidArgument(format!(
                "projection index {i} outside dimension {}",
                self.dim()
            )));
        }
        let sel = sparse::selector(indices, self.dim());
        self.affine_map(&sel, &vec![0.0; indices.len()])
    }

    /// `Z ⊕ [[lower, upper]]`. Point coordinates only shift the center.
    pub fn minkowski_sum_box(&self, v: &IntervalVector) -> Result<Self> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::dims("box summand", n, v.len()));
        }
        let mid = v.midpoints();
        let rad = v.radii();
        let wide: Vec<usize> = (0..n).filter(|&i| rad[i] > 0.0).collect();
        let ng = self.num_cont();
        let extra = sparse::from_triplets(
            n,
            wide.len(),
            wide.iter().enumerate().map(|(k, &i)| (i, k, rad[i])),
        );
        Ok(Self::from_parts(
            self.center.iter().zip(&mid).map(|(c, m)| c + m).collect(),
            sparse::hstack(&[&self.cont_gens, &extra]),
            self.bin_gens.clone(),
            sparse::hstack(&[&self.con_cont, &sparse::zeros(self.num_cons(), wide.len())]),
            self.con_bin.clone(),
            self.con_rhs.clone(),
        ))
        .map(|z| {
            debug_assert_eq!(z.num_cont(), ng + wide.len());
            z
        })
    }

    /// `Z1 × Z2`.
    pub fn cartesian_product(&self, other: &Self) -> Self {
        Self::from_parts(
            self.center.iter().chain(&other.center).copied().collect(),
            sparse::block_diag(&self.cont_gens, &other.cont_gens),
            sparse::block_diag(&self.bin_gens, &other.bin_gens),
            sparse::block_diag(&self.con_cont, &other.con_cont),
            sparse::block_diag(&self.con_bin, &other.con_bin),
            self.con_rhs.iter().chain(&other.con_rhs).copied().collect(),
        )
    }

    /// `{x ∈ Z1 : R x ∈ Z2}`. Factors of `Z1` come first.
    pub fn generalized_intersection(&self, other: &Self, r: &SparseMatrix) -> Result<Self> {
        if r.cols() != self.dim() {
            return Err(Error::dims("intersection map columns", self.dim(), r.cols()));
        }
        if r.rows() != other.dim() {
            return Err(Error::dims("intersection map rows", other.dim(), r.rows()));
        }
        let (g1, g2) = (self.num_cont(), other.num_cont());
        let (h1, h2) = (self.num_bin(), other.num_bin());
        let n = self.dim();
        let rgc = sparse::mul(r, &self.cont_gens);
        let rgb = sparse::mul(r, &self.bin_gens);
        let link_c = sparse::hstack(&[&rgc, &sparse::scale(&other.cont_gens, -1.0)]);
        let link_b = sparse::hstack(&[&rgb, &sparse::scale(&other.bin_gens, -1.0)]);
        let rc = sparse::mul_vec(r, &self.center);
        let mut rhs = self.con_rhs.clone();
        rhs.extend_from_slice(&other.con_rhs);
        rhs.extend(other.center.iter().zip(&rc).map(|(c2, rc)| c2 - rc));
        Ok(Self::from_parts(
            self.center.clone(),
            sparse::hstack(&[&self.cont_gens, &sparse::zeros(n, g2)]),
            sparse::hstack(&[&self.bin_gens, &sparse::zeros(n, h2)]),
            sparse::vstack(&[&sparse::block_diag(&self.con_cont, &other.con_cont), &link_c]),
            sparse::vstack(&[&sparse::block_diag(&self.con_bin, &other.con_bin), &link_b]),
            rhs,
        ))
        .map(|z| {
            debug_assert_eq!(z.num_cont(), g1 + g2);
            debug_assert_eq!(z.num_bin(), h1 + h2);
            z
        })
    }

    /// `Z1 ∪ Z2`, exact.
    ///
    /// A new binary `λ` selects the operand (`+1` for `Z1`). Factors of the
    /// unselected operand are pinned to zero and its constraints collapse to
    /// `0 = 0`; every gate is a pair of equalities with its own slack factor.
    /// Binary factors of each operand are copied into continuous surrogates
    /// that equal them when the operand is selected and vanish otherwise.
    ///
    /// Continuous factors: `[ξ1, ξ2, ω1, ω2, slacks]`; binary factors:
    /// `[η1, η2, λ]`.
    pub fn union(&self, other: &Self) -> Result<Self> {
        let n = self.dim();
        if other.dim() != n {
            return Err(Error::dims("union operand", n, other.dim()));
        }
        let (g1, g2) = (self.num_cont(), other.num_cont());
        let (h1, h2) = (self.num_bin(), other.num_bin());
        let (m1, m2) = (self.num_cons(), other.num_cons());
        let ng = 3 * (g1 + g2) + 5 * (h1 + h2);
        let nb = h1 + h2 + 1;
        let nc = m1 + m2 + 2 * (g1 + g2) + 4 * (h1 + h2);
        let lam = h1 + h2;
        let (xi1, xi2, om1, om2) = (0, g1, g1 + g2, g1 + g2 + h1);
        let mut slack = g1 + g2 + h1 + h2;

        let mut gc = Vec::new();
        let mut gb = Vec::new();
        for (v, (i, j)) in self.cont_gens.iter() {
            gc.push((i, xi1 + j, *v));
        }
        for (v, (i, j)) in other.cont_gens.iter() {
            gc.push((i, xi2 + j, *v));
        }
        for (v, (i, j)) in self.bin_gens.iter() {
            gc.push((i, om1 + j, *v));
        }
        for (v, (i, j)) in other.bin_gens.iter() {
            gc.push((i, om2 + j, *v));
        }
        for i in 0..n {
            gb.push((i, lam, (self.center[i] - other.center[i]) / 2.0));
        }
        let center = self
            .center
            .iter()
            .zip(&other.center)
            .map(|(a, b)| (a + b) / 2.0)
            .collect();

        let mut ac = Vec::new();
        let mut ab = Vec::new();
        let mut rhs = Vec::with_capacity(nc);
        // operand constraints, scaled by the selector
        for (v, (i, j)) in self.con_cont.iter() {
            ac.push((i, xi1 + j, *v));
        }
        for (v, (i, j)) in self.con_bin.iter() {
            ac.push((i, om1 + j, *v));
        }
        for (i, &b) in self.con_rhs.iter().enumerate() {
            ab.push((i, lam, -b / 2.0));
            rhs.push(b / 2.0);
        }
        for (v, (i, j)) in other.con_cont.iter() {
            ac.push((m1 + i, xi2 + j, *v));
        }
        for (v, (i, j)) in other.con_bin.iter() {
            ac.push((m1 + i, om2 + j, *v));
        }
        for (i, &b) in other.con_rhs.iter().enumerate() {
            ab.push((m1 + i, lam, b / 2.0));
            rhs.push(b / 2.0);
        }

        // ±f − s·λ/2 − σ = −1/2 pins f to 0 unless λ = s.
        let mut row = m1 + m2;
        let mut gate = |ac: &mut Vec<_>, ab: &mut Vec<_>, rhs: &mut Vec<f64>, f: usize, s: f64| {
            for sign in [1.0, -1.0] {
                ac.push((row, f, sign));
                ac.push((row, slack, -1.0));
                ab.push((row, lam, -s / 2.0));
                rhs.push(-0.5);
                row += 1;
                slack += 1;
            }
        };
        for j in 0..g1 {
            gate(&mut ac, &mut ab, &mut rhs, xi1 + j, 1.0);
        }
        for j in 0..g2 {
            gate(&mut ac, &mut ab, &mut rhs, xi2 + j, -1.0);
        }
        for j in 0..h1 {
            gate(&mut ac, &mut ab, &mut rhs, om1 + j, 1.0);
        }
        for j in 0..h2 {
            gate(&mut ac, &mut ab, &mut rhs, om2 + j, -1.0);
        }
        // ±(ω − η) + s·λ/2 − σ = −1/2 forces ω = η when λ = s.
        let mut tie = |ac: &mut Vec<_>, ab: &mut Vec<_>, rhs: &mut Vec<f64>, w: usize, e: usize, s: f64| {
            for sign in [1.0, -1.0] {
                ac.push((row, w, sign));
                ab.push((row, e, -sign));
                ac.push((row, slack, -1.0));
                ab.push((row, lam, s / 2.0));
                rhs.push(-0.5);
                row += 1;
                slack += 1;
            }
        };
        for j in 0..h1 {
            tie(&mut ac, &mut ab, &mut rhs, om1 + j, j, 1.0);
        }
        for j in 0..h2 {
            tie(&mut ac, &mut ab, &mut rhs, om2 + j, h1 + j, -1.0);
        }
        debug_assert_eq!(row, nc);
        debug_assert_eq!(slack, ng);

        Ok(Self::from_parts(
            center,
            sparse::from_triplets(n, ng, gc),
            sparse::from_triplets(n, nb, gb),
            sparse::from_triplets(nc, ng, ac),
            sparse::from_triplets(nc, nb, ab),
            rhs,
        ))
    }
}
