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

//! Embedded linear and mixed-binary optimization.
//!
//! Every exact set query on a hybrid zonotope (membership, emptiness,
//! support, interval hull) reduces to a program of the form
//!
//! ```text
//! minimize    cᵀx
//! subject to  A x = b,   l ≤ x ≤ u,   x_i ∈ {−1, +1} for i ∈ binaries
//! ```
//!
//! with finite bounds on every variable. Binaries are kept in the `{−1, +1}`
//! encoding the set representation uses.

mod milp;
mod simplex;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub use milp::{milp_optimize, MilpOptions, MilpStrategy, MixedBinaryProgram};
pub use simplex::lp_solve;

/// Absolute residual accepted on equality constraints of a returned witness.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// `minimize objective·x  s.t.  eq_matrix·x = eq_rhs,  lower ≤ x ≤ upper`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_matrix: SparseMatrix,
    pub eq_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub value: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Optimal(Solution),
    Infeasible,
}

impl Outcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Outcome::Optimal(_))
    }

    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Outcome::Optimal(s) => Some(s),
            Outcome::Infeasible => None,
        }
    }

    pub fn into_solution(self) -> Option<Solution> {
        match self {
            Outcome::Optimal(s) => Some(s),
            Outcome::Infeasible => None,
        }
    }
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.eq_matrix.cols() != n {
            return Err(Error::dims(
                "LP constraint columns",
                n,
                self.eq_matrix.cols(),
            ));
        }
        if self.eq_matrix.rows() != self.eq_rhs.len() {
            return Err(Error::dims(
                "LP constraint rows",
                self.eq_rhs.len(),
                self.eq_matrix.rows(),
            ));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::dims(
                "LP bounds",
                n,
                self.lower.len().min(self.upper.len()),
            ));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "variable {j} has non-finite bound [{l}, {u}]"
                )));
            }
            if l > u {
                return Err(Error::InvalidArgument(format!(
                    "variable {j} has lower {l} > upper {u}"
                )));
            }
        }
        if self
            .objective
            .iter()
            .chain(&self.eq_rhs)
            .chain(self.eq_matrix.data())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite LP coefficient".into()));
        }
        Ok(())
    }

    /// Largest absolute equality residual and bound violation of `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let ax = crate::sparse::mul_vec(&self.eq_matrix, x);
        let eq = ax
            .iter()
            .zip(&self.eq_rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let bnd = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max);
        eq.max(bnd)
    }

    /// CPLEX-style LP text dump for debugging.
    pub fn to_lp_text(&self, binaries: &[usize]) -> String {
        let mut out = String::from("Minimize\n obj:");
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                let _ = write!(out, " {c:+} x{j}");
            }
        }
        out.push_str("\nSubject To\n");
        for (i, row) in self.eq_matrix.outer_iterator().enumerate() {
            let _ = write!(out, " c{i}:");
            for (j, v) in row.iter() {
                let _ = write!(out, " {v:+} x{j}");
            }
            let _ = writeln!(out, " = {}", self.eq_rhs[i]);
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            let _ = writeln!(out, " {} <= x{j} <= {}", self.lower[j], self.upper[j]);
        }
        if !binaries.is_empty() {
            out.push_str("\\ binaries take values in {-1, +1}\n\\");
            for b in binaries {
                let _ = write!(out, " x{b}");
            }
            out.push('\n');
        }
        out.push_str("End\n");
        out
    }
}
