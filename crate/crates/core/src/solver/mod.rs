//! Linear and mixed-integer programming.
//!
//! A small self-contained solver: a dense bounded-variable simplex with a
//! dual simplex for warm starts, and best-bound branch-and-bound on top.

mod branch;
pub mod lp_format;
pub mod model;
mod simplex;

use std::time::{Duration, Instant};

pub use model::{Constraint, LinearModel, ObjectiveSense, Sense, VarId, VarKind, Variable};

use crate::error::Result;
use simplex::{LpOutcome, Tableau};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// A time, node or iteration limit stopped the search. `values` holds the
    /// incumbent if one was found.
    Limit,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Relative gap at which branch-and-bound stops.
    pub mip_gap: f64,
    /// Candidate solution used as the starting incumbent if feasible.
    pub incumbent: Option<Vec<f64>>,
    /// Budget for tableau snapshots kept on open nodes.
    pub memory_budget: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            time_limit: None,
            node_limit: None,
            mip_gap: 1e-6,
            incumbent: None,
            memory_budget: 256 << 20,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub simplex_iterations: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    /// Objective in the model's own sense, constant included. NaN when no
    /// solution is available.
    pub objective: f64,
    pub values: Vec<f64>,
    /// Row duals (LPs only): d objective / d rhs.
    pub duals: Vec<f64>,
    /// Best proven bound in the model's sense.
    pub bound: f64,
    pub stats: SolveStats,
    pub elapsed: Duration,
}

impl Solution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    pub fn has_values(&self) -> bool {
        !self.values.is_empty()
    }

    fn empty(status: Status, stats: SolveStats, start: Instant) -> Self {
        Self {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            duals: Vec::new(),
            bound: f64::NAN,
            stats,
            elapsed: start.elapsed(),
        }
    }
}

pub fn solve(model: &LinearModel) -> Result<Solution> {
    solve_with(model, &SolveOptions::default())
}

pub fn solve_with(model: &LinearModel, options: &SolveOptions) -> Result<Solution> {
    model.check()?;
    if model.has_integers() {
        return Ok(branch::branch_and_bound(model, options));
    }
    Ok(solve_lp(model))
}

/// Solve the continuous relaxation, ignoring integrality.
pub fn solve_relaxation(model: &LinearModel) -> Result<Solution> {
    model.check()?;
    Ok(solve_lp(model))
}

fn solve_lp(model: &LinearModel) -> Solution {
    let start = Instant::now();
    let mut t = Tableau::new(model);
    let outcome = t.solve_from_scratch();
    let stats = SolveStats {
        simplex_iterations: t.iterations,
        nodes: 0,
    };
    match outcome {
        LpOutcome::Optimal => {
            let values = t.structural_values();
            let objective = model.evaluate(&values);
            Solution {
                status: Status::Optimal,
                objective,
                duals: t.row_duals(model.sense),
                values,
                bound: objective,
                stats,
                elapsed: start.elapsed(),
            }
        }
        LpOutcome::Infeasible => Solution::empty(Status::Infeasible, stats, start),
        LpOutcome::Unbounded => Solution::empty(Status::Unbounded, stats, start),
        LpOutcome::IterationLimit => Solution::empty(Status::Limit, stats, start),
    }
}

#[cfg(test)]
mod tests;
