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

//! Axis-aligned boxes `[[lower, upper]]` and the interval arithmetic used by
//! bound propagation and neuron reduction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl IntervalVector {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dims("interval bounds", lower.len(), upper.len()));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u {
                return Err(Error::InvalidArgument(format!(
                    "interval {i} has lower {l} > upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Degenerate box `[[x, x]]`.
    pub fn point(x: &[f64]) -> Self {
        Self {
            lower: x.to_vec(),
            upper: x.to_vec(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::point(&vec![0.0; n])
    }

    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; n], vec![upper; n])
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn get(&self, i: usize) -> (f64, f64) {
        (self.lower[i], self.upper[i])
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (u - l))
            .collect()
    }

    /// Sum of widths.
    pub fn size(&self) -> f64 {
        self.widths().iter().sum()
    }

    pub fn is_point(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.len()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    /// `other ⊆ self` up to `tol`.
    pub fn encloses(&self, other: &IntervalVector, tol: f64) -> bool {
        self.len() == other.len()
            && (0..self.len()).all(|i| {
                other.lower[i] >= self.lower[i] - tol && other.upper[i] <= self.upper[i] + tol
            })
    }

    /// Elementwise intersection. If two boxes are disjoint in a coordinate
    /// the result collapses to the nearer endpoint of `other`, which keeps
    /// `lower <= upper`; callers intersect sound enclosures of the same set so
    /// this only triggers on rounding noise.
    pub fn intersect(&self, other: &IntervalVector) -> Result<IntervalVector> {
        if self.len() != other.len() {
            return Err(Error::dims(
                "interval intersection",
                self.len(),
                other.len(),
            ));
        }
        let mut lower = Vec::with_capacity(self.len());
        let mut upper = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let l = self.lower[i].max(other.lower[i]);
            let u = self.upper[i].min(other.upper[i]);
            if l <= u {
                lower.push(l);
                upper.push(u);
            } else {
                let m = 0.5 * (l + u);
                lower.push(m);
                upper.push(m);
            }
        }
        Ok(IntervalVector { lower, upper })
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &IntervalVector) -> Result<IntervalVector> {
        if self.len() != other.len() {
            return Err(Error::dims("interval hull", self.len(), other.len()));
        }
        Ok(IntervalVector {
            lower: self
                .lower
                .iter()
                .zip(&other.lower)
                .map(|(a, b)| a.min(*b))
                .collect(),
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a.max(*b))
                .collect(),
        })
    }

    /// Image under the elementwise ReLU.
    pub fn relu(&self) -> IntervalVector {
        IntervalVector {
            lower: self.lower.iter().map(|v| v.max(0.0)).collect(),
            upper: self.upper.iter().map(|v| v.max(0.0)).collect(),
        }
    }

    pub fn project(&self, indices: &[usize]) -> IntervalVector {
        IntervalVector {
            lower: indices.iter().map(|&i| self.lower[i]).collect(),
            upper: indices.iter().map(|&i| self.upper[i]).collect(),
        }
    }

    pub fn add(&self, other: &IntervalVector) -> Result<IntervalVector> {
        if self.len() != other.len() {
            return Err(Error::dims("interval sum", self.len(), other.len()));
        }
        Ok(IntervalVector {
            lower: self
                .lower
                .iter()
                .zip(&other.lower)
                .map(|(a, b)| a + b)
                .collect(),
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Interval matrix-vector product `W · [[l, u]]`.
    pub fn mul_matrix(&self, w: &SparseMatrix) -> Result<IntervalVector> {
        if w.cols() != self.len() {
            return Err(Error::dims("interval product", w.cols(), self.len()));
        }
        let mut lower = vec![0.0; w.rows()];
        let mut upper = vec![0.0; w.rows()];
        for (v, (i, j)) in w.iter() {
            let (a, b) = (v * self.lower[j], v * self.upper[j]);
            lower[i] += a.min(b);
            upper[i] += a.max(b);
        }
        Ok(IntervalVector { lower, upper })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse;

    #[test]
    fn rejects_inverted_bounds() {
        assert!(IntervalVector::new(vec![1.0], vec![0.0]).is_err());
        assert!(IntervalVector::new(vec![0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn interval_product_matches_endpoint_enumeration() {
        let w = sparse::from_dense(2, 2, &[1.0, -2.0, 0.0, 3.0]);
        let j = IntervalVector::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        let out = j.mul_matrix(&w).unwrap();
        assert_eq!(out.lower(), &[-1.0, 0.0]);
        assert_eq!(out.upper(), &[1.0, 1.5]);
    }

    #[test]
    fn relu_and_size() {
        let j = IntervalVector::new(vec![-2.0, 1.0], vec![3.0, 2.0]).unwrap();
        assert_eq!(j.relu().lower(), &[0.0, 1.0]);
        assert_eq!(j.size(), 6.0);
        assert!(j.contains(&[0.0, 1.5], 0.0));
        assert!(!j.contains(&[0.0, 2.5], 0.0));
    }
}
