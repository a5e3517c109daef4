//! Column-and-constraint generation for the two-stage problem.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::{
    build_dual_recourse, build_master, build_subproblem, demand_response, extract_worst_scenario,
    stage_one_value, Allocation, BioConfig,
};
use crate::instance::Instance;
use crate::solver::{self, SolveOptions, Status};
use crate::uncertainty::{enumerate_vertex_scenarios, DemandScenario, UncertaintySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubproblemMode {
    ExactMip,
    AlternatingHeuristic,
    AhThenMip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcgOptions {
    pub epsilon: f64,
    pub delta: f64,
    pub max_iterations: usize,
    pub max_seconds: f64,
    pub subproblem_mode: SubproblemMode,
    /// Round limit for the alternating heuristic.
    pub heuristic_rounds: usize,
    /// Branch-and-bound node cap per subproblem solve. Unlike the wall-clock
    /// budget it keeps limited runs reproducible.
    #[serde(default)]
    pub subproblem_node_limit: Option<usize>,
}

impl Default for CcgOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            delta: 1e-5,
            max_iterations: 20,
            max_seconds: 300.0,
            subproblem_mode: SubproblemMode::ExactMip,
            heuristic_rounds: 20,
            subproblem_node_limit: None,
        }
    }
}

impl CcgOptions {
    pub fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.delta > 0.0) {
            return Err(Error::InvalidArgument(
                "epsilon and delta must be positive".into(),
            ));
        }
        if self.max_iterations < 1 || !(self.max_seconds > 0.0) || self.heuristic_rounds < 1 {
            return Err(Error::InvalidArgument(
                "iteration, time and round limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationLimit,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub master_objective: f64,
    pub eta: f64,
    pub subproblem_objective: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Allocation achieving the best lower bound.
    pub allocation: Allocation,
    /// Optimistic demand paired with the allocation, if λ > 0.
    pub d_plus: Option<DemandScenario>,
    /// Objective of the returned allocation: the final lower bound.
    pub objective: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub trace: Vec<IterationRecord>,
    pub pool: Vec<DemandScenario>,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub termination: Termination,
    pub config: BioConfig,
    pub options: CcgOptions,
}

impl SolveReport {
    pub fn gap(&self) -> f64 {
        relative_gap(self.upper_bound, self.lower_bound, self.options.delta)
    }
}

pub fn relative_gap(ub: f64, lb: f64, delta: f64) -> f64 {
    if !ub.is_finite() || !lb.is_finite() {
        return f64::INFINITY;
    }
    ((ub - lb) / (lb.abs() + delta)).max(0.0)
}

/// Outcome of the alternating heuristic.
#[derive(Debug, Clone)]
pub struct HeuristicResult {
    pub scenario: DemandScenario,
    /// Recourse value at `scenario`; never below the exact minimum.
    pub objective: f64,
    /// Solution of the fixed-scenario dual LP at `scenario`.
    pub dual_solution: Vec<f64>,
    pub rounds: usize,
}

/// Alternate between the dual LP for a fixed scenario and the demand LP for
/// fixed duals, from both the lower and the upper corner; the better run wins.
pub fn alternating_heuristic_subproblem(
    inst: &Instance,
    set: &UncertaintySet,
    alloc: &Allocation,
    cfg: &BioConfig,
    rounds: usize,
) -> Result<HeuristicResult> {
    let mut best: Option<HeuristicResult> = None;
    for start in [set.upper_point(), set.lower_point()] {
        let h = alternating_from(inst, set, alloc, cfg, rounds, start)?;
        if best.as_ref().is_none_or(|b| h.objective < b.objective) {
            best = Some(h);
        }
    }
    Ok(best.expect("two starts"))
}

pub fn alternating_from(
    inst: &Instance,
    set: &UncertaintySet,
    alloc: &Allocation,
    cfg: &BioConfig,
    rounds: usize,
    start: DemandScenario,
) -> Result<HeuristicResult> {
    if rounds < 1 {
        return Err(Error::InvalidArgument("rounds must be at least 1".into()));
    }
    set.check_against(inst)?;
    let mut d = start;
    let mut best: Option<HeuristicResult> = None;
    let mut prev = f64::NAN;
    for r in 1..=rounds {
        let lp = build_dual_recourse(inst, alloc, &d, cfg)?;
        let sol = solver::solve(&lp.model)?;
        if sol.status != Status::Optimal {
            return Err(Error::Solver {
                status: sol.status,
                context: "dual recourse LP".into(),
            });
        }
        if best.as_ref().is_none_or(|b| sol.objective < b.objective) {
            best = Some(HeuristicResult {
                scenario: d.clone(),
                objective: sol.objective,
                dual_solution: sol.values.clone(),
                rounds: r,
            });
        }
        if let Some(b) = best.as_mut() {
            b.rounds = r;
        }
        if (sol.objective - prev).abs() < 1e-9 {
            break;
        }
        prev = sol.objective;
        let next = demand_response(inst, set, &lp.dual_values(&sol), cfg);
        if next == d {
            break;
        }
        d = next;
    }
    Ok(best.expect("at least one round"))
}

/// Exact BIO-λ objective of fixed orders: the master over every vertex
/// scenario with the orders pinned. Other first-stage choices (optimistic
/// sales, repositioning) are optimized.
pub fn allocation_objective(
    inst: &Instance,
    set: &UncertaintySet,
    alloc: &Allocation,
    cfg: &BioConfig,
) -> Result<f64> {
    cfg.check_instance(inst)?;
    set.check_against(inst)?;
    alloc.check_against(inst)?;
    let pool = enumerate_vertex_scenarios(set)?;
    let mut master = build_master(inst, set, &pool, cfg)?;
    master.pin_orders(&alloc.x)?;
    let sol = solver::solve(&master.model)?;
    match sol.status {
        Status::Optimal => Ok(sol.objective),
        status => Err(Error::Solver {
            status,
            context: "fixed-order master".into(),
        }),
    }
}

struct SubproblemOutcome {
    objective: f64,
    scenario: DemandScenario,
    exact: bool,
}

fn solve_subproblem(
    inst: &Instance,
    set: &UncertaintySet,
    alloc: &Allocation,
    cfg: &BioConfig,
    options: &CcgOptions,
    remaining: Duration,
) -> Result<SubproblemOutcome> {
    let heuristic = match options.subproblem_mode {
        SubproblemMode::ExactMip => None,
        _ => Some(alternating_heuristic_subproblem(
            inst,
            set,
            alloc,
            cfg,
            options.heuristic_rounds,
        )?),
    };
    if options.subproblem_mode == SubproblemMode::AlternatingHeuristic {
        let h = heuristic.expect("computed above");
        return Ok(SubproblemOutcome {
            objective: h.objective,
            scenario: h.scenario,
            exact: false,
        });
    }
    let sp = build_subproblem(inst, set, alloc, cfg)?;
    let opts = SolveOptions {
        time_limit: Some(remaining),
        node_limit: options.subproblem_node_limit,
        incumbent: heuristic
            .as_ref()
            .map(|h| sp.lift(&h.dual_solution, &h.scenario)),
        ..SolveOptions::default()
    };
    let sol = solver::solve_with(&sp.model, &opts)?;
    match sol.status {
        Status::Optimal => Ok(SubproblemOutcome {
            objective: sol.objective,
            scenario: extract_worst_scenario(&sp, &sol)?,
            exact: true,
        }),
        Status::Limit if sol.has_values() => Ok(SubproblemOutcome {
            objective: sol.objective,
            scenario: extract_worst_scenario(&sp, &sol)?,
            exact: false,
        }),
        status => Err(Error::Solver {
            status,
            context: "worst-case subproblem".into(),
        }),
    }
}

/// Alternate master and subproblem solves until the bounds meet or a limit
/// binds. The returned allocation is the one that achieved the best lower
/// bound, not the last master iterate.
pub fn solve_two_stage(
    inst: &Instance,
    set: &UncertaintySet,
    cfg: &BioConfig,
    options: &CcgOptions,
) -> Result<SolveReport> {
    options.check()?;
    cfg.check_instance(inst)?;
    set.check_against(inst)?;
    let start = Instant::now();
    let budget = Duration::from_secs_f64(options.max_seconds);
    let mut report = SolveReport {
        allocation: Allocation::zeros(inst.horizon, inst.num_nodes()),
        d_plus: None,
        objective: f64::NEG_INFINITY,
        lower_bound: f64::NEG_INFINITY,
        upper_bound: f64::INFINITY,
        trace: Vec::new(),
        pool: vec![set.lower_point()],
        iterations: 0,
        wall_seconds: 0.0,
        termination: Termination::IterationLimit,
        config: *cfg,
        options: *options,
    };
    let fail = |mut report: SolveReport, e: Error| -> Error {
        report.wall_seconds = start.elapsed().as_secs_f64();
        Error::CcgFailed {
            partial: Box::new(report),
            source: Box::new(e),
        }
    };

    for j in 1..=options.max_iterations {
        let Some(remaining) = budget.checked_sub(start.elapsed()).filter(|d| !d.is_zero()) else {
            report.termination = Termination::TimeLimit;
            break;
        };
        let master = match build_master(inst, set, &report.pool, cfg) {
            Ok(m) => m,
            Err(e) => return Err(fail(report, e)),
        };
        let msol = match solver::solve_with(
            &master.model,
            &SolveOptions {
                time_limit: Some(remaining),
                ..SolveOptions::default()
            },
        ) {
            Ok(s) => s,
            Err(e) => return Err(fail(report, e)),
        };
        match msol.status {
            Status::Optimal => {}
            Status::Limit if report.trace.is_empty() => {
                let e = Error::Solver {
                    status: msol.status,
                    context: "master problem".into(),
                };
                return Err(fail(report, e));
            }
            Status::Limit => {
                report.termination = Termination::TimeLimit;
                break;
            }
            status => {
                let e = Error::Solver {
                    status,
                    context: "master problem".into(),
                };
                return Err(fail(report, e));
            }
        }
        report.iterations = j;
        let eta = master.eta.map_or(0.0, |v| msol.value(v));
        report.upper_bound = report.upper_bound.min(msol.objective);
        let alloc = master.allocation(&msol);
        let d_plus = master.d_plus(&msol);

        let remaining = budget
            .saturating_sub(start.elapsed())
            .max(Duration::from_millis(1));
        let sp = match solve_subproblem(inst, set, &alloc, cfg, options, remaining) {
            Ok(sp) => sp,
            Err(e) => return Err(fail(report, e)),
        };
        let stage_one = stage_one_value(inst, &alloc, d_plus.as_ref(), cfg);
        let candidate = sp.objective + stage_one;
        if candidate > report.lower_bound {
            report.lower_bound = candidate;
            report.objective = candidate;
            report.allocation = alloc;
            report.d_plus = d_plus;
        }
        let gap = relative_gap(report.upper_bound, report.lower_bound, options.delta);
        report.trace.push(IterationRecord {
            iteration: j,
            master_objective: msol.objective,
            eta,
            subproblem_objective: sp.objective,
            lower_bound: report.lower_bound,
            upper_bound: report.upper_bound,
            gap,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
        if gap <= options.epsilon && sp.exact {
            report.termination = Termination::Converged;
            break;
        }
        if report.pool.contains(&sp.scenario) {
            report.termination = if sp.exact && gap <= options.epsilon {
                Termination::Converged
            } else {
                Termination::IterationLimit
            };
            break;
        }
        report.pool.push(sp.scenario);
        if !sp.exact && start.elapsed() >= budget {
            report.termination = Termination::TimeLimit;
            break;
        }
    }
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Worst-case profit of fixed orders over the set (no optimistic part).
pub fn worst_case_value(
    inst: &Instance,
    set: &UncertaintySet,
    alloc: &Allocation,
) -> Result<(f64, DemandScenario)> {
    let orders = alloc.orders_only();
    let cfg = BioConfig {
        repositioning: orders.x_repo.is_some(),
        ..BioConfig::default()
    };
    let sp = build_subproblem(inst, set, &orders, &cfg)?;
    let sol = solver::solve(&sp.model)?;
    if sol.status != Status::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            context: "worst-case evaluation".into(),
        });
    }
    let scen = extract_worst_scenario(&sp, &sol)?;
    Ok((
        sol.objective + stage_one_value(inst, &orders, None, &cfg),
        scen,
    ))
}
