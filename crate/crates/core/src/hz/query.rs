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

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use rand_chacha::ChaCha8Rng;

use super::HybridZonotope;
use crate::error::{Error, Result};
use crate::interval::IntervalVector;
use crate::linopt::{
    lp_solve, milp_optimize, LinearProgram, MilpOptions, MixedBinaryProgram, Outcome,
};
use crate::sparse;

/// Solver settings shared by every exact query.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QueryOptions {
    pub milp: MilpOptions,
}

/// A factor assignment `(ξc, ξb)` satisfying the constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Factors {
    pub cont: Vec<f64>,
    pub bin: Vec<f64>,
}

impl HybridZonotope {
    /// Program over `[ξc; ξb]` with the set's equality constraints.
    fn factor_program(&self, objective: Vec<f64>) -> MixedBinaryProgram {
        let (ng, nb) = (self.num_cont(), self.num_bin());
        let nv = ng + nb;
        let lp = LinearProgram {
            objective,
            eq_matrix: sparse::hstack(&[&self.con_cont, &self.con_bin]),
            eq_rhs: self.con_rhs.clone(),
            lower: vec![-1.0; nv],
            upper: vec![1.0; nv],
        };
        MixedBinaryProgram::new(lp, (ng..nv).collect())
    }

    fn split(&self, x: &[f64]) -> Factors {
        let ng = self.num_cont();
        Factors {
            cont: x[..ng].to_vec(),
            bin: x[ng..ng + self.num_bin()].to_vec(),
        }
    }

    pub fn is_empty(&self) -> Result<bool> {
        self.is_empty_with(&QueryOptions::default())
    }

    pub fn is_empty_with(&self, opts: &QueryOptions) -> Result<bool> {
        if self.num_cons() == 0 {
            return Ok(false);
        }
        let p = self.factor_program(vec![0.0; self.num_cont() + self.num_bin()]);
        Ok(!milp_optimize(&p, &opts.milp)?.is_feasible())
    }

    /// Some feasible factor assignment, if the set is nonempty.
    pub fn feasible_factors(&self, opts: &QueryOptions) -> Result<Option<Factors>> {
        let p = self.factor_program(vec![0.0; self.num_cont() + self.num_bin()]);
        Ok(milp_optimize(&p, &opts.milp)?
            .into_solution()
            .map(|s| self.split(&s.x)))
    }

    /// `max { d·x : x ∈ Z }`.
    pub fn support(&self, d: &[f64]) -> Result<f64> {
        self.support_with(d, &QueryOptions::default())
    }

    pub fn support_with(&self, d: &[f64], opts: &QueryOptions) -> Result<f64> {
        Ok(self.support_witness(d, opts)?.0)
    }

    /// Support value together with a maximizing factor assignment.
    pub fn support_witness(&self, d: &[f64], opts: &QueryOptions) -> Result<(f64, Factors)> {
        if d.len() != self.dim() {
            return Err(Error::dims("support direction", self.dim(), d.len()));
        }
        let dc: f64 = d.iter().zip(&self.center).map(|(a, b)| a * b).sum();
        let gc = row_times(d, &self.cont_gens);
        let gb = row_times(d, &self.bin_gens);
        if self.num_cons() == 0 {
            let sgn = |v: &f64| if *v >= 0.0 { 1.0 } else { -1.0 };
            let value = dc + gc.iter().chain(&gb).map(|v| v.abs()).sum::<f64>();
            let f = Factors {
                cont: gc.iter().map(sgn).collect(),
                bin: gb.iter().map(sgn).collect(),
            };
            return Ok((value, f));
        }
        let objective = gc.iter().chain(&gb).map(|v| -v).collect();
        let p = self.factor_program(objective);
        match milp_optimize(&p, &opts.milp)? {
            Outcome::Optimal(s) => Ok((dc - s.value, self.split(&s.x))),
            Outcome::Infeasible => Err(Error::EmptySet),
        }
    }

    /// Tightest axis-aligned box containing the set.
    pub fn interval_hull(&self) -> Result<IntervalVector> {
        self.interval_hull_with(&QueryOptions::default())
    }

    pub fn interval_hull_with(&self, opts: &QueryOptions) -> Result<IntervalVector> {
        let n = self.dim();
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for i in 0..n {
            let (l, u) = self.coordinate_range(i, opts)?;
            lower.push(l);
            upper.push(u);
        }
        IntervalVector::new(lower, upper)
    }

    /// `(min x_i, max x_i)` over the set.
    pub fn coordinate_range(&self, i: usize, opts: &QueryOptions) -> Result<(f64, f64)> {
        let mut e = vec![0.0; self.dim()];
        e[i] = 1.0;
        let u = self.support_with(&e, opts)?;
        e[i] = -1.0;
        let l = -self.support_with(&e, opts)?;
        // the two optima may cross by rounding when the range is a point
        Ok((l.min(u), u.max(l)))
    }

    /// Cheap enclosure `c ± (|Gc| 1 + |Gb| 1)` ignoring the constraints.
    pub fn generator_box(&self) -> IntervalVector {
        let mut r = sparse::row_abs_sums(&self.cont_gens);
        for (a, b) in r.iter_mut().zip(sparse::row_abs_sums(&self.bin_gens)) {
            *a += b;
        }
        let lower = self.center.iter().zip(&r).map(|(c, r)| c - r).collect();
        let upper = self.center.iter().zip(&r).map(|(c, r)| c + r).collect();
        IntervalVector::new(lower, upper).expect("radii are nonnegative")
    }

    /// Whether `x ∈ Z`, accepting residuals up to `tol` on every equality.
    pub fn contains_point(&self, x: &[f64], tol: f64) -> Result<bool> {
        self.contains_point_with(x, tol, &QueryOptions::default())
    }

    pub fn contains_point_with(&self, x: &[f64], tol: f64, opts: &QueryOptions) -> Result<bool> {
        Ok(self.membership_factors(x, tol, opts)?.is_some())
    }

    /// Factors reproducing `x` within `tol`, if any.
    pub fn membership_factors(
        &self,
        x: &[f64],
        tol: f64,
        opts: &QueryOptions,
    ) -> Result<Option<Factors>> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::dims("membership point", n, x.len()));
        }
        if !(tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {tol} must be ≥ 0")));
        }
        let (ng, nb, nc) = (self.num_cont(), self.num_bin(), self.num_cons());
        let nv = ng + nb + n + nc;
        let rows = n + nc;
        let gen = sparse::hstack(&[&self.cont_gens, &self.bin_gens]);
        let con = sparse::hstack(&[&self.con_cont, &self.con_bin]);
        let eq = sparse::hstack(&[
            &sparse::vstack(&[&gen, &con]),
            &sparse::identity(rows),
        ]);
        let mut rhs: Vec<f64> = x.iter().zip(&self.center).map(|(x, c)| x - c).collect();
        rhs.extend_from_slice(&self.con_rhs);
        let mut lower = vec![-1.0; nv];
        let mut upper = vec![1.0; nv];
        for j in ng + nb..nv {
            lower[j] = -tol;
            upper[j] = tol;
        }
        let lp = LinearProgram {
            objective: vec![0.0; nv],
            eq_matrix: eq,
            eq_rhs: rhs,
            lower,
            upper,
        };
        let p = MixedBinaryProgram::new(lp, (ng..ng + nb).collect());
        Ok(milp_optimize(&p, &opts.milp)?
            .into_solution()
            .map(|s| self.split(&s.x)))
    }

    /// `k` points of the set, reproducible from `seed`.
    ///
    /// Each draw fixes a binary pattern taken from a randomly directed
    /// optimum, then mixes a few randomly directed vertices of that slice.
    pub fn sample_points(&self, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.sample_points_with(k, seed, &QueryOptions::default())
    }

    pub fn sample_points_with(
        &self,
        k: usize,
        seed: u64,
        opts: &QueryOptions,
    ) -> Result<Vec<Vec<f64>>> {
        if k == 0 {
            return Ok(vec![]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ng, nb) = (self.num_cont(), self.num_bin());
        if self.num_cons() == 0 {
            return (0..k)
                .map(|_| {
                    let c: Vec<f64> = (0..ng).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    let b: Vec<f64> = (0..nb)
                        .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
                        .collect();
                    self.evaluate(&c, &b)
                })
                .collect();
        }
        if self.is_empty_with(opts)? {
            return Err(Error::EmptySet);
        }
        let nv = ng + nb;
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            let dir: Vec<f64> = (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = self.factor_program(dir);
            let Some(s) = milp_optimize(&p, &opts.milp)?.into_solution() else {
                return Err(Error::EmptySet);
            };
            let mut slice = p.lp.clone();
            for j in ng..nv {
                slice.lower[j] = s.x[j];
                slice.upper[j] = s.x[j];
            }
            let vertices = 3;
            let mut weights: Vec<f64> = (0..vertices).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = weights.iter().sum::<f64>().max(f64::MIN_POSITIVE);
            weights.iter_mut().for_each(|w| *w /= total);
            let mut xi = vec![0.0; nv];
            for w in weights {
                slice.objective = (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let v = lp_solve(&slice)?
                    .into_solution()
                    .ok_or(Error::Infeasible)?;
                for (a, b) in xi.iter_mut().zip(&v.x) {
                    *a += w * b;
                }
            }
            let f = self.split(&xi);
            let mut bin = f.bin;
            for (j, b) in bin.iter_mut().enumerate() {
                *b = s.x[ng + j];
            }
            out.push(self.evaluate(&f.cont, &bin)?);
        }
        Ok(out)
    }
}

/// `dᵀ M` as a dense row.
fn row_times(d: &[f64], m: &sparse::SparseMatrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (v, (i, j)) in m.iter() {
        out[j] += d[i] * v;
    }
    out
}
