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

//! Hybrid zonotopes.
//!
//! A hybrid zonotope in `R^n` is the set
//!
//! ```text
//! { Gc ξc + Gb ξb + c  :  Ac ξc + Ab ξb = b,  ξc ∈ [−1, 1]^ng,  ξb ∈ {−1, 1}^nb }
//! ```
//!
//! It represents finite unions of constrained zonotopes, which makes it closed
//! under affine maps, Cartesian products, generalized intersections and
//! unions. Exact queries (membership, support, interval hull) reduce to
//! mixed-binary linear programs.
//!
//! Empty blocks are stored as matrices with a zero dimension, so every
//! operation is total.

mod ops;
mod query;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalVector;
use crate::sparse::{self, SparseMatrix};

pub use query::{Factors, QueryOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HzJson", into = "HzJson")]
pub struct HybridZonotope {
    center: Vec<f64>,
    cont_gens: SparseMatrix,
    bin_gens: SparseMatrix,
    con_cont: SparseMatrix,
    con_bin: SparseMatrix,
    con_rhs: Vec<f64>,
}

/// Generator and constraint counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Complexity {
    pub dim: usize,
    pub ng: usize,
    pub nb: usize,
    pub nc: usize,
}

impl HybridZonotope {
    pub fn new(
        center: Vec<f64>,
        cont_gens: SparseMatrix,
        bin_gens: SparseMatrix,
        con_cont: SparseMatrix,
        con_bin: SparseMatrix,
        con_rhs: Vec<f64>,
    ) -> Result<Self> {
        let n = center.len();
        let check = |ctx, expected, actual| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::dims(ctx, expected, actual))
            }
        };
        check("continuous generator rows", n, cont_gens.rows())?;
        check("binary generator rows", n, bin_gens.rows())?;
        check("continuous constraint columns", cont_gens.cols(), con_cont.cols())?;
        check("binary constraint columns", bin_gens.cols(), con_bin.cols())?;
        check("continuous constraint rows", con_rhs.len(), con_cont.rows())?;
        check("binary constraint rows", con_rhs.len(), con_bin.rows())?;
        let finite = center.iter().chain(&con_rhs).all(|v| v.is_finite())
            && [&cont_gens, &bin_gens, &con_cont, &con_bin]
                .iter()
                .all(|m| m.data().iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::InvalidArgument("non-finite hybrid zonotope entry".into()));
        }
        Ok(Self::from_parts(center, cont_gens, bin_gens, con_cont, con_bin, con_rhs))
    }

    /// Assembles without validation. Shapes must already agree.
    pub(crate) fn from_parts(
        center: Vec<f64>,
        cont_gens: SparseMatrix,
        bin_gens: SparseMatrix,
        con_cont: SparseMatrix,
        con_bin: SparseMatrix,
        con_rhs: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(cont_gens.rows(), center.len());
        debug_assert_eq!(bin_gens.rows(), center.len());
        debug_assert_eq!(con_cont.cols(), cont_gens.cols());
        debug_assert_eq!(con_bin.cols(), bin_gens.cols());
        debug_assert_eq!(con_cont.rows(), con_rhs.len());
        debug_assert_eq!(con_bin.rows(), con_rhs.len());
        Self {
            center,
            cont_gens: ensure_csr(cont_gens),
            bin_gens: ensure_csr(bin_gens),
            con_cont: ensure_csr(con_cont),
            con_bin: ensure_csr(con_bin),
            con_rhs,
        }
    }

    /// Zonotope `{G ξ + c}` without binaries or constraints.
    pub fn zonotope(center: Vec<f64>, gens: SparseMatrix) -> Result<Self> {
        let n = center.len();
        let ng = gens.cols();
        Self::new(
            center,
            gens,
            sparse::zeros(n, 0),
            sparse::zeros(0, ng),
            sparse::zeros(0, 0),
            vec![],
        )
    }

    /// The singleton `{x}`.
    pub fn point(x: &[f64]) -> Self {
        let n = x.len();
        Self::from_parts(
            x.to_vec(),
            sparse::zeros(n, 0),
            sparse::zeros(n, 0),
            sparse::zeros(0, 0),
            sparse::zeros(0, 0),
            vec![],
        )
    }

    /// `[−1, 1]^n`.
    pub fn unit_box(n: usize) -> Self {
        Self::from_parts(
            vec![0.0; n],
            sparse::identity(n),
            sparse::zeros(n, 0),
            sparse::zeros(0, n),
            sparse::zeros(0, 0),
            vec![],
        )
    }

    /// Axis-aligned box with one generator per coordinate of nonzero width.
    pub fn from_box(b: &IntervalVector) -> Self {
        Self::point(&vec![0.0; b.len()])
            .minkowski_sum_box(b)
            .expect("dimensions agree by construction")
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_cont(&self) -> usize {
        self.cont_gens.cols()
    }

    pub fn num_bin(&self) -> usize {
        self.bin_gens.cols()
    }

    pub fn num_cons(&self) -> usize {
        self.con_rhs.len()
    }

    pub fn complexity(&self) -> Complexity {
        Complexity {
            dim: self.dim(),
            ng: self.num_cont(),
            nb: self.num_bin(),
            nc: self.num_cons(),
        }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn cont_gens(&self) -> &SparseMatrix {
        &self.cont_gens
    }

    pub fn bin_gens(&self) -> &SparseMatrix {
        &self.bin_gens
    }

    pub fn con_cont(&self) -> &SparseMatrix {
        &self.con_cont
    }

    pub fn con_bin(&self) -> &SparseMatrix {
        &self.con_bin
    }

    pub fn con_rhs(&self) -> &[f64] {
        &self.con_rhs
    }

    /// `Gc ξc + Gb ξb + c`, without checking the constraints.
    pub fn evaluate(&self, xi_c: &[f64], xi_b: &[f64]) -> Result<Vec<f64>> {
        if xi_c.len() != self.num_cont() {
            return Err(Error::dims("continuous factors", self.num_cont(), xi_c.len()));
        }
        if xi_b.len() != self.num_bin() {
            return Err(Error::dims("binary factors", self.num_bin(), xi_b.len()));
        }
        let a = sparse::mul_vec(&self.cont_gens, xi_c);
        let b = sparse::mul_vec(&self.bin_gens, xi_b);
        Ok(self
            .center
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(c, (a, b))| c + a + b)
            .collect())
    }

    /// Largest violation of factor bounds, binarity and equality constraints.
    pub fn factor_violation(&self, xi_c: &[f64], xi_b: &[f64]) -> Result<f64> {
        if xi_c.len() != self.num_cont() || xi_b.len() != self.num_bin() {
            return Err(Error::dims(
                "factor vector",
                self.num_cont() + self.num_bin(),
                xi_c.len() + xi_b.len(),
            ));
        }
        let bound = xi_c
            .iter()
            .map(|v| (v.abs() - 1.0).max(0.0))
            .chain(xi_b.iter().map(|v| (v.abs() - 1.0).abs()))
            .fold(0.0, f64::max);
        let a = sparse::mul_vec(&self.con_cont, xi_c);
        let b = sparse::mul_vec(&self.con_bin, xi_b);
        let eq = self
            .con_rhs
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(r, (a, b))| (a + b - r).abs())
            .fold(0.0, f64::max);
        Ok(bound.max(eq))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn ensure_csr(m: SparseMatrix) -> SparseMatrix {
    if m.is_csr() {
        m
    } else {
        m.to_csr()
    }
}

/// Wire format. Field names follow the usual `⟨Gc, Gb, c, Ac, Ab, b⟩` notation.
#[derive(Serialize, Deserialize)]
struct HzJson {
    c: Vec<f64>,
    #[serde(rename = "Gc", with = "sparse::serde_matrix")]
    gc: SparseMatrix,
    #[serde(rename = "Gb", with = "sparse::serde_matrix")]
    gb: SparseMatrix,
    #[serde(rename = "Ac", with = "sparse::serde_matrix")]
    ac: SparseMatrix,
    #[serde(rename = "Ab", with = "sparse::serde_matrix")]
    ab: SparseMatrix,
    b: Vec<f64>,
}

impl TryFrom<HzJson> for HybridZonotope {
    type Error = Error;

    fn try_from(j: HzJson) -> Result<Self> {
        HybridZonotope::new(j.c, j.gc, j.gb, j.ac, j.ab, j.b)
    }
}

impl From<HybridZonotope> for HzJson {
    fn from(z: HybridZonotope) -> Self {
        HzJson {
            c: z.center,
            gc: z.cont_gens,
            gb: z.bin_gens,
            ac: z.con_cont,
            ab: z.con_bin,
            b: z.con_rhs,
        }
    }
}
