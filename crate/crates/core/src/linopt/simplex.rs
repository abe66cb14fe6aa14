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

//! Two-phase bounded-variable primal simplex on a dense tableau.
//!
//! Variables are shifted to `0 ≤ y ≤ u − l`; every nonbasic variable rests at
//! one of its bounds. Phase one minimizes the sum of one artificial per row.
//! Pricing is Dantzig's rule with lowest-index tie-breaking; after a run of
//! degenerate pivots it falls back to Bland's rule until the objective moves
//! again, so the pivot sequence is a pure function of the input.

use super::{LinearProgram, Outcome, Solution};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    ncols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    state: Vec<VarState>,
    can_enter: Vec<bool>,
    reduced: Vec<f64>,
    pivots: usize,
    max_pivots: usize,
}

enum Step {
    Optimal,
    Moved,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => 0.0,
            VarState::AtUpper => self.upper[j],
            VarState::Basic => {
                let r = self
                    .basis
                    .iter()
                    .position(|&b| b == j)
                    .expect("basic var in basis");
                self.beta[r]
            }
        }
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.reduced = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (d, a) in self.reduced.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            self.reduced[b] = 0.0;
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            if !self.can_enter[j] {
                continue;
            }
            let d = self.reduced[j];
            let dir = match self.state[j] {
                VarState::AtLower if d < -OPT_TOL => 1.0,
                VarState::AtUpper if d > OPT_TOL => -1.0,
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            match best {
                Some((b, _)) if self.reduced[b].abs() >= d.abs() => {}
                _ => best = Some((j, dir)),
            }
        }
        best
    }

    /// One pricing + ratio test + update. Returns the step length taken.
    fn iterate(&mut self, bland: bool) -> Result<(Step, f64)> {
        let Some((j, dir)) = self.choose_entering(bland) else {
            return Ok((Step::Optimal, 0.0));
        };
        self.pivots += 1;
        if self.pivots > self.max_pivots {
            return Err(Error::IterationLimit(self.pivots));
        }

        let mut step = self.upper[j];
        let mut leave: Option<(usize, VarState)> = None;
        for i in 0..self.m {
            let a = self.at(i, j) * dir;
            let (limit, bound) = if a > PIVOT_TOL {
                (self.beta[i] / a, VarState::AtLower)
            } else if a < -PIVOT_TOL {
                let ub = self.upper[self.basis[i]];
                if !ub.is_finite() {
                    continue;
                }
                ((ub - self.beta[i]) / -a, VarState::AtUpper)
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            let better = match leave {
                None => limit < step,
                Some((r, _)) => {
                    limit < step - 1e-12 || (limit <= step + 1e-12 && self.basis[i] < self.basis[r])
                }
            };
            if better {
                step = limit;
                leave = Some((i, bound));
            }
        }
        if !step.is_finite() {
            return Err(Error::Unbounded);
        }

        for i in 0..self.m {
            let a = self.at(i, j);
            if a != 0.0 {
                self.beta[i] -= a * dir * step;
            }
        }

        match leave {
            None => {
                // bound flip
                self.state[j] = if dir > 0.0 {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
            }
            Some((r, bound)) => {
                let start = if self.state[j] == VarState::AtUpper {
                    self.upper[j]
                } else {
                    0.0
                };
                let leaving = self.basis[r];
                self.state[leaving] = bound;
                self.beta[r] = start + dir * step;
                self.pivot(r, j);
            }
        }
        Ok((Step::Moved, step))
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let piv = self.t[r * n + j];
        for v in &mut self.t[r * n..(r + 1) * n] {
            *v /= piv;
        }
        let (before, rest) = self.t.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        for row in before.chunks_exact_mut(n).chain(after.chunks_exact_mut(n)) {
            let f = row[j];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let f = self.reduced[j];
        if f != 0.0 {
            for (d, p) in self.reduced.iter_mut().zip(prow.iter()) {
                *d -= f * p;
            }
            self.reduced[j] = 0.0;
        }
        self.basis[r] = j;
        self.state[j] = VarState::Basic;
    }

    fn run(&mut self) -> Result<()> {
        let mut streak = 0usize;
        loop {
            let bland = streak >= DEGENERATE_STREAK;
            match self.iterate(bland)? {
                (Step::Optimal, _) => return Ok(()),
                (Step::Moved, s) => {
                    if s <= 1e-12 {
                        streak += 1;
                    } else {
                        streak = 0;
                    }
                }
            }
        }
    }
}

/// Solves a box-bounded equality-form LP.
pub fn lp_solve(p: &LinearProgram) -> Result<Outcome> {
    p.validate()?;
    let n = p.num_vars();
    let m_all = p.num_constraints();

    // y = x − l
    let shift = crate::sparse::mul_vec(&p.eq_matrix, &p.lower);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m_all);
    let mut rhs: Vec<f64> = Vec::with_capacity(m_all);
    for (i, row) in p.eq_matrix.outer_iterator().enumerate() {
        let entries: Vec<(usize, f64)> = row
            .iter()
            .map(|(j, &v)| (j, v))
            .filter(|e| e.1 != 0.0)
            .collect();
        let r = p.eq_rhs[i] - shift[i];
        let scale = entries.iter().fold(0.0f64, |a, e| a.max(e.1.abs()));
        if scale == 0.0 {
            if r.abs() > super::FEASIBILITY_TOL {
                return Ok(Outcome::Infeasible);
            }
            continue;
        }
        let sign = if r < 0.0 { -1.0 } else { 1.0 };
        let f = sign / scale;
        rows.push(entries.into_iter().map(|(j, v)| (j, v * f)).collect());
        rhs.push(r * f);
    }
    let m = rows.len();
    let ncols = n + m;

    let mut t = vec![0.0; m * ncols];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            t[i * ncols + j] = v;
        }
        t[i * ncols + n + i] = 1.0;
    }
    let mut upper: Vec<f64> = p.lower.iter().zip(&p.upper).map(|(l, u)| u - l).collect();
    upper.extend(std::iter::repeat(f64::INFINITY).take(m));
    let mut state = vec![VarState::AtLower; ncols];
    for s in &mut state[n..] {
        *s = VarState::Basic;
    }
    let can_enter: Vec<bool> = (0..ncols).map(|j| j >= n || upper[j] > 0.0).collect();

    let mut tab = Tableau {
        m,
        ncols,
        t,
        beta: rhs.clone(),
        basis: (n..ncols).collect(),
        upper,
        state,
        can_enter,
        reduced: vec![0.0; ncols],
        pivots: 0,
        max_pivots: 50 * (ncols + m) + 1000,
    };

    // phase one
    let mut cost1 = vec![0.0; ncols];
    for c in &mut cost1[n..] {
        *c = 1.0;
    }
    tab.set_costs(&cost1);
    tab.run()?;
    let infeas: f64 = (0..m)
        .filter(|&i| tab.basis[i] >= n)
        .map(|i| tab.beta[i])
        .sum();
    let rhs_scale = rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if infeas > 1e-9 * rhs_scale {
        return Ok(Outcome::Infeasible);
    }

    // drive remaining artificials out of the basis
    for r in 0..m {
        if tab.basis[r] < n {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if tab.state[j] == VarState::Basic {
                continue;
            }
            let a = tab.at(r, j).abs();
            if a > 1e-7 && best.map_or(true, |(_, b)| a > b) {
                best = Some((j, a));
            }
        }
        if let Some((j, _)) = best {
            let art = tab.basis[r];
            let val = tab.value(j);
            tab.state[art] = VarState::AtLower;
            tab.beta[r] = val;
            tab.pivot(r, j);
        }
    }
    for j in n..ncols {
        tab.can_enter[j] = false;
        tab.upper[j] = 0.0;
    }

    // phase two
    let mut cost2 = p.objective.clone();
    cost2.extend(std::iter::repeat(0.0).take(m));
    tab.set_costs(&cost2);
    tab.run()?;

    let mut x = vec![0.0; n];
    for (j, xj) in x.iter_mut().enumerate() {
        *xj = match tab.state[j] {
            VarState::AtLower => 0.0,
            VarState::AtUpper => tab.upper[j],
            VarState::Basic => 0.0,
        };
    }
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.beta[r];
        }
    }
    for j in 0..n {
        x[j] = (x[j] + p.lower[j]).clamp(p.lower[j], p.upper[j]);
    }
    let value = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(Outcome::Optimal(Solution { value, x }))
}
