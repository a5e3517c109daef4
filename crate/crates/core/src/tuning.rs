//! Choosing the optimism level λ: superposition of the two extreme
//! solutions, single-location closed forms, and out-of-sample scoring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ccg::{solve_two_stage, CcgOptions, SolveReport, Termination};
use crate::error::{Error, Result};
use crate::formulations::{
    add_recourse_block, build_subproblem, evaluate_allocation, stage_one_value, Allocation,
    BioConfig, LinExpr,
};
use crate::instance::Instance;
use crate::solver::{self, LinearModel, ObjectiveSense, Sense, Status, VarId};
use crate::uncertainty::{DemandScenario, UncertaintySet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoringObjective {
    Mean,
    WorstCase,
    BestCase,
    /// Mean of the lowest `ceil(level * n)` profits.
    Cvar {
        level: f64,
    },
    Mixture {
        parts: Vec<(f64, ScoringObjective)>,
    },
}

impl ScoringObjective {
    pub fn check(&self, samples: usize) -> Result<()> {
        match self {
            ScoringObjective::Cvar { level } => {
                if !(*level > 0.0 && *level <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "cvar level {level} outside (0, 1]"
                    )));
                }
                if (samples as f64) < (1.0 / level).ceil() {
                    return Err(Error::InvalidArgument(format!(
                        "cvar at level {level} needs at least {} samples, got {samples}",
                        (1.0 / level).ceil()
                    )));
                }
                Ok(())
            }
            ScoringObjective::Mixture { parts } => {
                if parts.iter().any(|(w, _)| !(*w >= 0.0)) {
                    return Err(Error::InvalidArgument(
                        "mixture weights must be nonnegative".into(),
                    ));
                }
                let total: f64 = parts.iter().map(|p| p.0).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "mixture weights sum to {total}, not 1"
                    )));
                }
                parts.iter().try_for_each(|(_, p)| p.check(samples))
            }
            _ => Ok(()),
        }
    }

    /// Whether the score is concave in the allocation (everything except
    /// the best case).
    fn is_concave(&self) -> bool {
        match self {
            ScoringObjective::BestCase => false,
            ScoringObjective::Mixture { parts } => {
                parts.iter().all(|(w, p)| *w == 0.0 || p.is_concave())
            }
            _ => true,
        }
    }
}

/// `λ·x1 + (1−λ)·x0`, element-wise over orders and repositioning.
pub fn superpose(x0: &Allocation, x1: &Allocation, lambda: f64) -> Result<Allocation> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "lambda {lambda} outside [0, 1]"
        )));
    }
    let mix = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Result<Vec<Vec<f64>>> {
        if a.len() != b.len() || a.iter().zip(b).any(|(r, s)| r.len() != s.len()) {
            return Err(Error::Dimension("allocations differ in shape".into()));
        }
        Ok(a.iter()
            .zip(b)
            .map(|(r, s)| {
                r.iter()
                    .zip(s)
                    .map(|(&u, &v)| lambda * v + (1.0 - lambda) * u)
                    .collect()
            })
            .collect())
    };
    let x_repo = match (&x0.x_repo, &x1.x_repo) {
        (None, None) => None,
        (Some(a), Some(b)) if a.len() == b.len() => Some(
            a.iter()
                .zip(b)
                .map(|(u, v)| mix(u, v))
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => {
            return Err(Error::Dimension(
                "only one allocation carries repositioning".into(),
            ))
        }
    };
    Ok(Allocation {
        x: mix(&x0.x, &x1.x)?,
        x_repo,
        s_plus: None,
        y_plus: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub x_bio0: f64,
    pub z_bio0: f64,
    pub x_bio1: f64,
    pub z_bio1: f64,
}

/// Optimal pure robust and best-case orders for one location, one period,
/// zero lead time and no stock. When the price is below cost the best case
/// still orders the smallest demand, since selling it beats paying the
/// penalty.
pub fn closed_form_single_location(
    p: f64,
    b: f64,
    h: f64,
    c: f64,
    d_min: f64,
    d_max: f64,
) -> Result<ClosedForm> {
    if !(c > 0.0)
        || !(p + b >= c)
        || !(d_min <= d_max)
        || d_min < 0.0
        || p < 0.0
        || b < 0.0
        || h < 0.0
    {
        return Err(Error::Precondition(format!(
            "closed form needs p+b >= c > 0 and 0 <= d_min <= d_max (p={p}, b={b}, c={c}, d=[{d_min}, {d_max}])"
        )));
    }
    let (x_bio1, z_bio1) = if p >= c {
        (d_max, (p - c) * d_max)
    } else {
        (d_min, (p - c) * d_min)
    };
    let den = p + b + h;
    Ok(ClosedForm {
        x_bio0: ((p + h) * d_min + b * d_max) / den,
        z_bio0: ((p + b - c) * (p + h) * d_min - (h + c) * b * d_max) / den,
        x_bio1,
        z_bio1,
    })
}

/// Realized profit per scenario, in scenario order.
pub fn scenario_profits(
    inst: &Instance,
    alloc: &Allocation,
    scenarios: &[DemandScenario],
) -> Result<Vec<f64>> {
    scenarios
        .par_iter()
        .map(|s| evaluate_allocation(inst, alloc, s).map(|p| p.profit))
        .collect()
}

pub fn score_profits(profits: &[f64], objective: &ScoringObjective) -> Result<f64> {
    if profits.is_empty() {
        return Err(Error::InvalidArgument("no scenarios to score".into()));
    }
    objective.check(profits.len())?;
    Ok(score_unchecked(profits, objective))
}

fn score_unchecked(profits: &[f64], objective: &ScoringObjective) -> f64 {
    let n = profits.len() as f64;
    match objective {
        ScoringObjective::Mean => profits.iter().sum::<f64>() / n,
        ScoringObjective::WorstCase => profits.iter().copied().fold(f64::INFINITY, f64::min),
        ScoringObjective::BestCase => profits.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ScoringObjective::Cvar { level } => {
            let k = ((level * n).ceil() as usize).clamp(1, profits.len());
            let mut v = profits.to_vec();
            v.sort_by(f64::total_cmp);
            v[..k].iter().sum::<f64>() / k as f64
        }
        ScoringObjective::Mixture { parts } => parts
            .iter()
            .map(|(w, p)| w * score_unchecked(profits, p))
            .sum(),
    }
}

pub fn score_allocation(
    inst: &Instance,
    alloc: &Allocation,
    scenarios: &[DemandScenario],
    objective: &ScoringObjective,
) -> Result<f64> {
    if scenarios.is_empty() {
        return Err(Error::InvalidArgument("no scenarios to score".into()));
    }
    objective.check(scenarios.len())?;
    score_profits(&scenario_profits(inst, alloc, scenarios)?, objective)
}

/// First `ceil(fraction * n)` scenarios for validation, the rest held out.
pub fn split_scenarios(
    scenarios: &[DemandScenario],
    fraction: f64,
) -> (&[DemandScenario], &[DemandScenario]) {
    let k =
        ((fraction.clamp(0.0, 1.0) * scenarios.len() as f64).ceil() as usize).min(scenarios.len());
    scenarios.split_at(k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TuneMethod {
    Grid { values: Vec<f64> },
    Bisection,
}

impl TuneMethod {
    /// Default λ grid.
    pub fn default_grid() -> Self {
        TuneMethod::Grid {
            values: vec![0.05, 0.10, 0.25, 0.50, 0.75],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub lambda: f64,
    pub allocation: Allocation,
    /// Score on the validation scenarios.
    pub score: f64,
    /// Score on the held-out scenarios, if any were given.
    pub holdout_score: Option<f64>,
    /// Every λ evaluated, in evaluation order.
    pub curve: Vec<CurvePoint>,
}

/// Pick λ by out-of-sample score on `validation`.
///
/// Grid search solves the two-stage problem once per value. Bisection
/// solves only λ = 0 and λ = 1 and searches the segment between the two
/// allocations, which is valid when the instance starts empty and
/// allocations are continuous.
pub fn tune_lambda(
    inst: &Instance,
    set: &UncertaintySet,
    validation: &[DemandScenario],
    holdout: &[DemandScenario],
    objective: &ScoringObjective,
    method: &TuneMethod,
    base: &BioConfig,
    options: &CcgOptions,
) -> Result<TuneResult> {
    if validation.is_empty() {
        return Err(Error::InvalidArgument("no validation scenarios".into()));
    }
    objective.check(validation.len())?;
    let (lambda, allocation, score, curve) = match method {
        TuneMethod::Grid { values } => {
            grid_search(inst, set, validation, objective, values, base, options)?
        }
        TuneMethod::Bisection => {
            if !inst.has_zero_initial_inventory() {
                return Err(Error::Precondition(
                    "bisection needs zero initial inventory; use a grid instead".into(),
                ));
            }
            if base.integer_allocations {
                return Err(Error::Precondition(
                    "bisection needs continuous allocations; use a grid instead".into(),
                ));
            }
            segment_search(inst, set, validation, objective, base, options)?
        }
    };
    let holdout_score = if holdout.is_empty() || objective.check(holdout.len()).is_err() {
        None
    } else {
        Some(score_allocation(inst, &allocation, holdout, objective)?)
    };
    Ok(TuneResult {
        lambda,
        allocation,
        score,
        holdout_score,
        curve,
    })
}

type SearchOutcome = (f64, Allocation, f64, Vec<CurvePoint>);

fn solve_at(
    inst: &Instance,
    set: &UncertaintySet,
    base: &BioConfig,
    lambda: f64,
    options: &CcgOptions,
) -> Result<SolveReport> {
    let cfg = BioConfig { lambda, ..*base };
    solve_two_stage(inst, set, &cfg, options)
}

fn grid_search(
    inst: &Instance,
    set: &UncertaintySet,
    validation: &[DemandScenario],
    objective: &ScoringObjective,
    values: &[f64],
    base: &BioConfig,
    options: &CcgOptions,
) -> Result<SearchOutcome> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty λ grid".into()));
    }
    let mut grid = values.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let runs: Vec<(f64, Allocation, f64)> = grid
        .par_iter()
        .map(|&lambda| {
            let report = solve_at(inst, set, base, lambda, options)?;
            let alloc = report.allocation.orders_only();
            let score = score_allocation(inst, &alloc, validation, objective)?;
            Ok((lambda, alloc, score))
        })
        .collect::<Result<_>>()?;
    let curve = runs
        .iter()
        .map(|r| CurvePoint {
            lambda: r.0,
            score: r.2,
        })
        .collect();
    let mut best = &runs[0];
    for r in &runs[1..] {
        if r.2 > best.2 + 1e-9 * (1.0 + best.2.abs()) {
            best = r;
        }
    }
    Ok((best.0, best.1.clone(), best.2, curve))
}

fn segment_search(
    inst: &Instance,
    set: &UncertaintySet,
    validation: &[DemandScenario],
    objective: &ScoringObjective,
    base: &BioConfig,
    options: &CcgOptions,
) -> Result<SearchOutcome> {
    let x0 = solve_at(inst, set, base, 0.0, options)?
        .allocation
        .orders_only();
    let x1 = solve_at(inst, set, base, 1.0, options)?
        .allocation
        .orders_only();
    let mut curve = Vec::new();
    let mut eval = |lambda: f64| -> Result<f64> {
        let s = score_allocation(inst, &superpose(&x0, &x1, lambda)?, validation, objective)?;
        curve.push(CurvePoint { lambda, score: s });
        Ok(s)
    };

    let mut best = (0.0, eval(0.0)?);
    let s1 = eval(1.0)?;
    if s1 > best.1 + 1e-9 * (1.0 + best.1.abs()) {
        best = (1.0, s1);
    }
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    while b - a > 1e-3 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d)?;
        }
    }
    for &(l, s) in &[(c, fc), (d, fd)] {
        if s > best.1 + 1e-9 * (1.0 + best.1.abs())
            || (s > best.1 - 1e-12 && l < best.0 && s >= best.1)
        {
            best = (l, s);
        }
    }
    if objective.is_concave() && x0.x_repo.is_none() {
        let (l, _) = segment_program(inst, &x0, &x1, validation, objective)?;
        let s = eval(l)?;
        if s > best.1 {
            best = (l, s);
        }
    }
    let alloc = superpose(&x0, &x1, best.0)?;
    Ok((best.0, alloc, best.1, curve))
}

/// Maximize a concave score of `x0 + λ(x1 − x0)` over λ ∈ [0, 1] as one LP
/// with a fulfillment copy per scenario. Returns `(λ, score)`.
pub fn segment_program(
    inst: &Instance,
    x0: &Allocation,
    x1: &Allocation,
    scenarios: &[DemandScenario],
    objective: &ScoringObjective,
) -> Result<(f64, f64)> {
    if !objective.is_concave() {
        return Err(Error::InvalidArgument(
            "segment program needs a concave score".into(),
        ));
    }
    if scenarios.is_empty() {
        return Err(Error::InvalidArgument("no scenarios to score".into()));
    }
    objective.check(scenarios.len())?;
    x0.check_against(inst)?;
    x1.check_against(inst)?;
    let (periods, n) = (inst.horizon, inst.num_nodes());
    let mut m = LinearModel::new(ObjectiveSense::Maximize);
    let lam = m.continuous("lambda", 0.0, 1.0);

    let mut supply = vec![vec![LinExpr::default(); n]; periods];
    let mut cost = LinExpr::default();
    let mut cost_slope = 0.0;
    for t in 0..periods {
        for l in 0..n {
            let s = &mut supply[t][l];
            s.constant =
                inst.pipeline_arrival(l, t) + if t == 0 { inst.initial_on_hand(l) } else { 0.0 };
            let lead = inst.lead_time(l);
            if t >= lead {
                s.constant += x0.x[t - lead][l];
                s.add(lam, x1.x[t - lead][l] - x0.x[t - lead][l]);
            }
            cost.constant -= inst.econ.purchase_cost[l] * x0.x[t][l];
            cost_slope -= inst.econ.purchase_cost[l] * (x1.x[t][l] - x0.x[t][l]);
        }
    }
    cost.add(lam, cost_slope);

    let profits: Vec<LinExpr> = scenarios
        .iter()
        .enumerate()
        .map(|(i, sc)| {
            let block = add_recourse_block(&mut m, inst, sc, 0.0, 0.0, &supply, &format!("k{i}_"));
            let mut p = block.objective;
            p.constant += cost.constant;
            p.terms.extend(cost.terms.iter().copied());
            p
        })
        .collect();
    let score = score_expr(&mut m, objective, &profits, "root");
    for (v, c) in merge(&score.terms) {
        m.add_objective_coeff(v, c);
    }
    m.objective_constant = score.constant;
    let sol = solver::solve(&m)?;
    if sol.status != Status::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            context: "segment program".into(),
        });
    }
    Ok((sol.value(lam).clamp(0.0, 1.0), sol.objective))
}

fn merge(terms: &[(VarId, f64)]) -> Vec<(VarId, f64)> {
    let mut v = terms.to_vec();
    v.sort_by_key(|t| t.0);
    let mut out: Vec<(VarId, f64)> = Vec::new();
    for (id, c) in v {
        match out.last_mut() {
            Some(last) if last.0 == id => last.1 += c,
            _ => out.push((id, c)),
        }
    }
    out
}

fn score_expr(
    m: &mut LinearModel,
    objective: &ScoringObjective,
    profits: &[LinExpr],
    tag: &str,
) -> LinExpr {
    let n = profits.len() as f64;
    match objective {
        ScoringObjective::Mean => {
            let mut e = LinExpr::default();
            for p in profits {
                e.constant += p.constant / n;
                for &(v, c) in &p.terms {
                    e.add(v, c / n);
                }
            }
            e
        }
        ScoringObjective::WorstCase | ScoringObjective::Cvar { .. } => {
            let k = match objective {
                ScoringObjective::Cvar { level } => ((level * n).ceil()).clamp(1.0, n),
                _ => 1.0,
            };
            let tau = m.continuous(format!("{tag}_tau"), f64::NEG_INFINITY, f64::INFINITY);
            let mut e = LinExpr::default();
            e.add(tau, 1.0);
            for (i, p) in profits.iter().enumerate() {
                let u = m.continuous(format!("{tag}_u{i}"), 0.0, f64::INFINITY);
                let mut row = vec![(u, 1.0), (tau, -1.0)];
                row.extend(p.terms.iter().copied());
                m.add_constraint(
                    format!("{tag}_tail{i}"),
                    merge(&row),
                    Sense::Ge,
                    -p.constant,
                );
                e.add(u, -1.0 / k);
            }
            e
        }
        ScoringObjective::BestCase => unreachable!("checked concave"),
        ScoringObjective::Mixture { parts } => {
            let mut e = LinExpr::default();
            for (j, (w, p)) in parts.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let part = score_expr(m, p, profits, &format!("{tag}_{j}"));
                e.constant += w * part.constant;
                for (v, c) in part.terms {
                    e.add(v, w * c);
                }
            }
            e
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionReport {
    pub lambda: f64,
    pub z0: f64,
    pub z1: f64,
    pub z_lambda: f64,
    /// `|Z_λ − λZ_1 − (1−λ)Z_0|`.
    pub residual: f64,
    pub superposed: Allocation,
    /// Objective of the superposed allocation, paired with λ times the
    /// best-case optimistic sales, re-scored through the exact subproblem.
    pub superposed_value: f64,
    pub all_converged: bool,
}

/// Solve at λ = 0, 1 and the given λ and compare against the straight line.
pub fn verify_superposition(
    inst: &Instance,
    set: &UncertaintySet,
    lambda: f64,
    base: &BioConfig,
    options: &CcgOptions,
) -> Result<SuperpositionReport> {
    if !inst.has_zero_initial_inventory() {
        return Err(Error::Precondition(
            "superposition needs zero initial inventory".into(),
        ));
    }
    if base.integer_allocations {
        return Err(Error::Precondition(
            "superposition needs continuous allocations".into(),
        ));
    }
    let r0 = solve_at(inst, set, base, 0.0, options)?;
    let r1 = solve_at(inst, set, base, 1.0, options)?;
    let rl = solve_at(inst, set, base, lambda, options)?;
    let residual = (rl.objective - lambda * r1.objective - (1.0 - lambda) * r0.objective).abs();

    let cfg = BioConfig { lambda, ..*base };
    let mut sup = superpose(&r0.allocation, &r1.allocation, lambda)?;
    let scale = |g: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        g.iter()
            .map(|r| r.iter().map(|v| lambda * v).collect())
            .collect()
    };
    sup.s_plus = r1
        .allocation
        .s_plus
        .as_ref()
        .filter(|_| cfg.lambda_walkin() > 0.0)
        .map(scale);
    sup.y_plus = r1
        .allocation
        .y_plus
        .as_ref()
        .filter(|_| cfg.lambda_online() > 0.0)
        .map(|y| y.iter().map(scale).collect());
    let d_plus = if lambda > 0.0 {
        r1.d_plus.clone()
    } else {
        None
    };
    let sp = build_subproblem(inst, set, &sup, &cfg)?;
    let sol = solver::solve(&sp.model)?;
    if sol.status != Status::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            context: "re-scoring superposed allocation".into(),
        });
    }
    let superposed_value = sol.objective + stage_one_value(inst, &sup, d_plus.as_ref(), &cfg);
    Ok(SuperpositionReport {
        lambda,
        z0: r0.objective,
        z1: r1.objective,
        z_lambda: rl.objective,
        residual,
        superposed: sup,
        superposed_value,
        all_converged: [&r0, &r1, &rl]
            .iter()
            .all(|r| r.termination == Termination::Converged),
    })
}
