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

//! Mixed-binary programs over `{−1, +1}` binaries.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{lp_solve, LinearProgram, Outcome, Solution};
use crate::error::{Error, Result};

const INTEGRALITY_TOL: f64 = 1e-7;

/// An LP whose `binaries` columns are restricted to `{−1, +1}`.
///
/// The bounds of binary columns in `lp` are ignored; the relaxation uses
/// `[−1, 1]`.
#[derive(Debug, Clone)]
pub struct MixedBinaryProgram {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MilpStrategy {
    /// Solve one LP per binary pattern, in lexicographic order with −1 first.
    Enumerate,
    #[default]
    BranchAndBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MilpOptions {
    pub strategy: MilpStrategy,
    /// Largest binary count `Enumerate` accepts.
    pub enumerate_budget: usize,
    /// Largest number of LP relaxations branch-and-bound may solve.
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            strategy: MilpStrategy::BranchAndBound,
            enumerate_budget: 20,
            node_limit: 200_000,
        }
    }
}

impl MixedBinaryProgram {
    pub fn new(lp: LinearProgram, binaries: Vec<usize>) -> Self {
        Self { lp, binaries }
    }

    fn relaxation(&self) -> LinearProgram {
        let mut lp = self.lp.clone();
        for &b in &self.binaries {
            lp.lower[b] = -1.0;
            lp.upper[b] = 1.0;
        }
        lp
    }

    fn validate(&self) -> Result<()> {
        let n = self.lp.num_vars();
        if let Some(&b) = self.binaries.iter().find(|&&b| b >= n) {
            return Err(Error::InvalidArgument(format!(
                "binary index {b} out of range for {n} variables"
            )));
        }
        Ok(())
    }
}

/// Minimizes a mixed-binary program.
pub fn milp_optimize(p: &MixedBinaryProgram, opts: &MilpOptions) -> Result<Outcome> {
    p.validate()?;
    let base = p.relaxation();
    base.validate()?;
    if p.binaries.is_empty() {
        return lp_solve(&base);
    }
    match opts.strategy {
        MilpStrategy::Enumerate => enumerate(p, base, opts),
        MilpStrategy::BranchAndBound => branch_and_bound(p, base, opts),
    }
}

fn enumerate(p: &MixedBinaryProgram, mut lp: LinearProgram, opts: &MilpOptions) -> Result<Outcome> {
    let k = p.binaries.len();
    if k > opts.enumerate_budget {
        return Err(Error::BudgetExceeded(format!(
            "{k} binaries exceed the enumeration budget of {}",
            opts.enumerate_budget
        )));
    }
    let mut best: Option<Solution> = None;
    for pattern in 0u64..(1u64 << k) {
        for (bit, &b) in p.binaries.iter().enumerate() {
            // most significant bit first so patterns run lexicographically
            let on = pattern >> (k - 1 - bit) & 1 == 1;
            let v = if on { 1.0 } else { -1.0 };
            lp.lower[b] = v;
            lp.upper[b] = v;
        }
        if let Outcome::Optimal(s) = lp_solve(&lp)? {
            if best.as_ref().map_or(true, |cur| s.value < cur.value) {
                best = Some(s);
            }
        }
    }
    Ok(best.map_or(Outcome::Infeasible, Outcome::Optimal))
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: the "greatest" node is popped first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

fn branch_and_bound(
    p: &MixedBinaryProgram,
    base: LinearProgram,
    opts: &MilpOptions,
) -> Result<Outcome> {
    let mut lp = base;
    let mut solved = 0usize;
    let mut solve = |lp: &LinearProgram| -> Result<Outcome> {
        solved += 1;
        if solved > opts.node_limit {
            return Err(Error::BudgetExceeded(format!(
                "branch-and-bound node limit {} reached",
                opts.node_limit
            )));
        }
        lp_solve(lp)
    };

    let Outcome::Optimal(root) = solve(&lp)? else {
        return Ok(Outcome::Infeasible);
    };
    let mut seq = 0usize;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: root.value,
        depth: 0,
        seq,
        lower: lp.lower.clone(),
        upper: lp.upper.clone(),
        x: root.x,
    });
    let mut incumbent: Option<Solution> = None;
    let prunes = |bound: f64, inc: &Option<Solution>| {
        inc.as_ref()
            .is_some_and(|s| bound >= s.value - 1e-9 * (1.0 + s.value.abs()))
    };

    while let Some(node) = heap.pop() {
        if prunes(node.bound, &incumbent) {
            continue;
        }
        let frac = p
            .binaries
            .iter()
            .copied()
            .find(|&b| (node.x[b].abs() - 1.0).abs() > INTEGRALITY_TOL);

        lp.lower.clone_from(&node.lower);
        lp.upper.clone_from(&node.upper);
        let Some(b) = frac else {
            // snap binaries and polish the continuous part
            for &b in &p.binaries {
                let v = if node.x[b] >= 0.0 { 1.0 } else { -1.0 };
                lp.lower[b] = v;
                lp.upper[b] = v;
            }
            let polished = match solve(&lp)? {
                Outcome::Optimal(s) => s,
                Outcome::Infeasible => {
                    let mut x = node.x.clone();
                    for &b in &p.binaries {
                        x[b] = lp.lower[b];
                    }
                    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                    Solution { value, x }
                }
            };
            if incumbent
                .as_ref()
                .map_or(true, |s| polished.value < s.value)
            {
                incumbent = Some(polished);
            }
            continue;
        };

        let first = if node.x[b] >= 0.0 { 1.0 } else { -1.0 };
        for v in [first, -first] {
            lp.lower.clone_from(&node.lower);
            lp.upper.clone_from(&node.upper);
            lp.lower[b] = v;
            lp.upper[b] = v;
            if let Outcome::Optimal(s) = solve(&lp)? {
                if prunes(s.value, &incumbent) {
                    continue;
                }
                seq += 1;
                heap.push(Node {
                    bound: s.value,
                    depth: node.depth + 1,
                    seq,
                    lower: lp.lower.clone(),
                    upper: lp.upper.clone(),
                    x: s.x,
                });
            }
        }
    }
    Ok(incumbent.map_or(Outcome::Infeasible, Outcome::Optimal))
}
