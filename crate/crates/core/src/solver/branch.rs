//! Best-bound branch-and-bound with eager child evaluation. Until an
//! incumbent exists the search plunges depth-first into the better child.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use super::model::{LinearModel, ObjectiveSense, VarKind};
use super::simplex::{LpOutcome, Tableau};
use super::{Solution, SolveOptions, SolveStats, Status};

const INT_TOL: f64 = 1e-6;

struct Node {
    /// LP bound in minimization form.
    bound: f64,
    depth: usize,
    bounds: Vec<(usize, f64, f64)>,
    values: Vec<f64>,
    tableau: Option<Rc<Tableau>>,
    seq: usize,
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
    // BinaryHeap is a max-heap: smallest bound first, deeper first on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

fn min_sign(model: &LinearModel) -> f64 {
    match model.sense {
        ObjectiveSense::Minimize => 1.0,
        ObjectiveSense::Maximize => -1.0,
    }
}

fn most_fractional(model: &LinearModel, values: &[f64]) -> Option<usize> {
    let mut best = None;
    let mut best_frac = INT_TOL;
    for (j, v) in model.variables.iter().enumerate() {
        if v.kind == VarKind::Continuous {
            continue;
        }
        let x = values[j];
        let f = (x - x.floor()).min(x.ceil() - x);
        if f > best_frac {
            best_frac = f;
            best = Some(j);
        }
    }
    best
}

fn rounded(model: &LinearModel, mut values: Vec<f64>) -> Vec<f64> {
    for (j, v) in model.variables.iter().enumerate() {
        if v.kind != VarKind::Continuous {
            values[j] = values[j].round();
        }
    }
    values
}

pub(super) fn branch_and_bound(model: &LinearModel, options: &SolveOptions) -> Solution {
    let start = Instant::now();
    let sign = min_sign(model);
    let mut stats = SolveStats::default();

    let mut relaxed = model.clone();
    for v in &mut relaxed.variables {
        if v.kind != VarKind::Continuous {
            v.lower = v.lower.ceil();
            v.upper = v.upper.floor();
        }
    }
    if relaxed.variables.iter().any(|v| v.lower > v.upper) {
        return Solution::empty(Status::Infeasible, stats, start);
    }

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(cand) = &options.incumbent {
        if cand.len() == model.num_vars() {
            let cand = rounded(model, cand.clone());
            if model.max_violation(&cand) <= 1e-6 {
                incumbent = Some((sign * model.evaluate(&cand), cand));
            }
        }
    }

    let mut root = Tableau::new(&relaxed);
    let outcome = root.solve_from_scratch();
    stats.simplex_iterations += root.iterations;
    match outcome {
        LpOutcome::Optimal => {}
        LpOutcome::Infeasible => return Solution::empty(Status::Infeasible, stats, start),
        LpOutcome::Unbounded => return Solution::empty(Status::Unbounded, stats, start),
        LpOutcome::IterationLimit => {
            return finish(
                model,
                incumbent,
                f64::NEG_INFINITY,
                Status::Limit,
                stats,
                start,
            )
        }
    }
    let root = Rc::new(root);
    let root_values = root.structural_values();
    let root_bound = sign * model.evaluate(&root_values);

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut stored_bytes = 0usize;
    heap.push(Node {
        bound: root_bound,
        depth: 0,
        bounds: Vec::new(),
        values: root_values,
        tableau: Some(root.clone()),
        seq,
    });
    stored_bytes += root.memory_bytes();

    let prune_tol = |inc: f64| 1e-7 * inc.abs().max(1.0);
    let mut best_bound = root_bound;

    let mut plunge: Option<Node> = None;
    while let Some(node) = plunge.take().or_else(|| heap.pop()) {
        best_bound = heap.peek().map_or(node.bound, |h| h.bound.min(node.bound));
        if let Some(t) = &node.tableau {
            stored_bytes = stored_bytes.saturating_sub(t.memory_bytes());
        }
        if let Some((inc, _)) = &incumbent {
            if node.bound >= inc - prune_tol(*inc) {
                continue;
            }
            let gap = (inc - best_bound) / inc.abs().max(1.0);
            if gap <= options.mip_gap {
                heap.clear();
                break;
            }
        }
        if options.time_limit.is_some_and(|l| start.elapsed() >= l)
            || options.node_limit.is_some_and(|l| stats.nodes >= l)
        {
            heap.push(node);
            let bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
            return finish(model, incumbent, bound, Status::Limit, stats, start);
        }
        stats.nodes += 1;

        let Some(j) = most_fractional(model, &node.values) else {
            let vals = rounded(model, node.values);
            let obj = sign * model.evaluate(&vals);
            if incumbent.as_ref().is_none_or(|(inc, _)| obj < *inc) {
                incumbent = Some((obj, vals));
            }
            continue;
        };

        let parent = match node.tableau {
            Some(t) => t,
            None => {
                let mut t = (*root).clone();
                for &(k, lo, hi) in &node.bounds {
                    t.set_bounds(k, lo, hi);
                }
                let out = t.resolve_after_bound_change();
                stats.simplex_iterations += t.iterations;
                if out != LpOutcome::Optimal {
                    continue;
                }
                Rc::new(t)
            }
        };
        let x = node.values[j];
        let (cur_lo, cur_hi) = current_bounds(&relaxed, &node.bounds, j);
        let mut children = Vec::with_capacity(2);
        for (lo, hi) in [(cur_lo, x.floor()), (x.ceil(), cur_hi)] {
            if lo > hi {
                continue;
            }
            let mut child = (*parent).clone();
            let before = child.iterations;
            child.set_bounds(j, lo, hi);
            let out = child.resolve_after_bound_change();
            stats.simplex_iterations += child.iterations - before;
            if out != LpOutcome::Optimal {
                continue;
            }
            let values = child.structural_values();
            let bound = sign * model.evaluate(&values);
            if let Some((inc, _)) = &incumbent {
                if bound >= inc - prune_tol(*inc) {
                    continue;
                }
            }
            let mut bounds = node.bounds.clone();
            bounds.push((j, lo, hi));
            if most_fractional(model, &values).is_none() {
                let vals = rounded(model, values);
                let obj = sign * model.evaluate(&vals);
                if incumbent.as_ref().is_none_or(|(inc, _)| obj < *inc) {
                    incumbent = Some((obj, vals));
                }
                continue;
            }
            let bytes = child.memory_bytes();
            let tableau = if stored_bytes + bytes <= options.memory_budget {
                stored_bytes += bytes;
                Some(Rc::new(child))
            } else {
                None
            };
            seq += 1;
            children.push(Node {
                bound,
                depth: node.depth + 1,
                bounds,
                values,
                tableau,
                seq,
            });
        }
        if incumbent.is_none() {
            children.sort_by(|a, b| b.bound.total_cmp(&a.bound));
            plunge = children.pop();
        }
        heap.extend(children);
    }

    match incumbent {
        Some((inc, _)) => {
            let bound = best_bound.min(inc);
            finish(model, incumbent, bound, Status::Optimal, stats, start)
        }
        None => Solution::empty(Status::Infeasible, stats, start),
    }
}

fn current_bounds(model: &LinearModel, bounds: &[(usize, f64, f64)], j: usize) -> (f64, f64) {
    let mut lo = model.variables[j].lower;
    let mut hi = model.variables[j].upper;
    for &(k, l, h) in bounds {
        if k == j {
            lo = l;
            hi = h;
        }
    }
    (lo, hi)
}

fn finish(
    model: &LinearModel,
    incumbent: Option<(f64, Vec<f64>)>,
    bound_min: f64,
    status: Status,
    stats: SolveStats,
    start: Instant,
) -> Solution {
    let sign = min_sign(model);
    match incumbent {
        Some((_, values)) => Solution {
            status,
            objective: model.evaluate(&values),
            values,
            duals: Vec::new(),
            bound: sign * bound_min,
            stats,
            elapsed: start.elapsed(),
        },
        None => {
            let mut s = Solution::empty(status, stats, start);
            s.bound = sign * bound_min;
            s
        }
    }
}
