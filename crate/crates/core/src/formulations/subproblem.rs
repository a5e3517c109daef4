use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solver::{LinearModel, ObjectiveSense, Sense, Solution, VarId};
use crate::uncertainty::{
    Channel, ChannelBounds, DemandScenario, UncertaintySet, DISCRETE_POINT_CAP,
};

use super::{supply_constants, window_coeff, Allocation, BioConfig};

/// Dual recourse variables at a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct DualValues {
    /// Walk-in sales caps, `[t][l]`.
    pub alpha: Vec<Vec<f64>>,
    /// Online demand caps, `[t][z]`; zero for zones without edges.
    pub beta: Vec<Vec<f64>>,
    /// Inventory balance, `[t][l]`.
    pub gamma: Vec<Vec<f64>>,
}

struct Choice {
    channel: Channel,
    t: usize,
    k: usize,
    value: f64,
    w: VarId,
    prod: Option<(VarId, VarId)>,
}

/// Minimization model whose optimum is the worst-case recourse profit.
///
/// Built either as the exact mixed-integer program over the uncertainty set
/// ([`build_subproblem`]) or as a plain LP for one fixed scenario
/// ([`build_dual_recourse`]).
pub struct SubproblemModel {
    pub model: LinearModel,
    alpha: Vec<Vec<VarId>>,
    beta: Vec<Vec<Option<VarId>>>,
    gamma: Vec<Vec<VarId>>,
    choices: Vec<Choice>,
    periods: usize,
    nodes: usize,
    zones: usize,
}

impl SubproblemModel {
    pub fn dual_values(&self, sol: &Solution) -> DualValues {
        let get = |v: &VarId| sol.value(*v);
        DualValues {
            alpha: self
                .alpha
                .iter()
                .map(|r| r.iter().map(get).collect())
                .collect(),
            beta: self
                .beta
                .iter()
                .map(|r| r.iter().map(|v| v.map_or(0.0, |v| sol.value(v))).collect())
                .collect(),
            gamma: self
                .gamma
                .iter()
                .map(|r| r.iter().map(get).collect())
                .collect(),
        }
    }

    pub fn num_binaries(&self) -> usize {
        self.choices.len()
    }

    /// Full assignment of the exact model built from a solution of the
    /// fixed-scenario dual LP at `scen`. Used to seed branch-and-bound.
    pub fn lift(&self, dual_lp_values: &[f64], scen: &DemandScenario) -> Vec<f64> {
        let mut v = vec![0.0; self.model.num_vars()];
        let core = dual_lp_values.len().min(v.len());
        v[..core].copy_from_slice(&dual_lp_values[..core]);
        for c in &self.choices {
            if scen.channel(c.channel)[c.t][c.k] == c.value {
                v[c.w.0] = 1.0;
                if let Some((p, d)) = c.prod {
                    v[p.0] = v[d.0];
                }
            }
        }
        v
    }
}

/// Upper bounds on α and β valid at some dual optimum.
pub(crate) fn big_m(inst: &Instance) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (periods, n, nz) = (inst.horizon, inst.num_nodes(), inst.num_zones());
    let e = &inst.econ;
    let edges = inst.fulfillment_edges();
    let tail = |t: usize, l: usize| (periods - t) as f64 * e.holding[l];
    let m_b = (0..periods)
        .map(|t| {
            (0..n)
                .map(|l| e.walkin_price[t][l] + e.walkin_penalty[t][l] + tail(t, l))
                .collect()
        })
        .collect();
    let mut m_o: Vec<Vec<f64>> = (0..periods)
        .map(|t| {
            (0..nz)
                .map(|z| {
                    let best = edges
                        .iter()
                        .filter(|ed| ed.1 == z)
                        .map(|&(l, _, _)| tail(t, l) - e.fulfill_cost[l][z])
                        .fold(f64::NEG_INFINITY, f64::max);
                    if best.is_finite() {
                        (e.online_price[t] + e.online_penalty[t] + best).max(0.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    if let Some(sw) = &inst.business_rules.service_window {
        if sw.target_fraction > 0.0 {
            let mmax = m_o.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
            let extra = (1.0 - sw.target_fraction) / sw.target_fraction * mmax;
            for v in m_o.iter_mut().flatten() {
                *v += extra;
            }
        }
    }
    (m_b, m_o)
}

/// Dual variables and rows shared by both subproblem forms. The objective
/// gets the supply and capacity terms.
fn dual_core(inst: &Instance, alloc: &Allocation, cfg: &BioConfig) -> Result<SubproblemModel> {
    inst.check_structure()?;
    alloc.check_against(inst)?;
    cfg.check_instance(inst)?;
    let (periods, n, nz) = (inst.horizon, inst.num_nodes(), inst.num_zones());
    let e = &inst.econ;
    let edges = inst.fulfillment_edges();
    let (m_b, m_o) = big_m(inst);
    let supply = supply_constants(inst, alloc);
    let mut m = LinearModel::new(ObjectiveSense::Minimize);

    let gamma: Vec<Vec<VarId>> = (0..periods)
        .map(|t| {
            (0..n)
                .map(|l| m.continuous(format!("gamma_{t}_{l}"), f64::NEG_INFINITY, f64::INFINITY))
                .collect()
        })
        .collect();
    let alpha: Vec<Vec<VarId>> = (0..periods)
        .map(|t| {
            (0..n)
                .map(|l| m.continuous(format!("alpha_{t}_{l}"), 0.0, m_b[t][l]))
                .collect()
        })
        .collect();
    let beta: Vec<Vec<Option<VarId>>> = (0..periods)
        .map(|t| {
            (0..nz)
                .map(|z| {
                    edges
                        .iter()
                        .any(|ed| ed.1 == z)
                        .then(|| m.continuous(format!("beta_{t}_{z}"), 0.0, m_o[t][z]))
                })
                .collect()
        })
        .collect();
    let caps = inst.business_rules.fulfillment_capacity.as_ref();
    let mu: Vec<Vec<Option<VarId>>> = (0..periods)
        .map(|t| {
            (0..n)
                .map(|l| {
                    (caps.is_some() && edges.iter().any(|ed| ed.0 == l))
                        .then(|| m.continuous(format!("mu_{t}_{l}"), 0.0, f64::INFINITY))
                })
                .collect()
        })
        .collect();
    let has_window = edges.iter().any(|ed| window_coeff(inst, ed.2).is_some());
    let nu: Vec<Option<VarId>> = (0..periods)
        .map(|t| has_window.then(|| m.continuous(format!("nu_{t}"), 0.0, f64::INFINITY)))
        .collect();

    for t in 0..periods {
        for l in 0..n {
            m.add_constraint(
                format!("sale_{t}_{l}"),
                vec![(alpha[t][l], 1.0), (gamma[t][l], 1.0)],
                Sense::Ge,
                e.walkin_price[t][l] + e.walkin_penalty[t][l],
            );
            let mut hold = vec![(gamma[t][l], 1.0)];
            if t + 1 < periods {
                hold.push((gamma[t + 1][l], -1.0));
            }
            m.add_constraint(format!("hold_{t}_{l}"), hold, Sense::Ge, -e.holding[l]);
            m.add_objective_coeff(gamma[t][l], supply[t][l]);
            if let (Some(mv), Some(c)) = (mu[t][l], caps) {
                m.add_objective_coeff(mv, c[t][l]);
            }
        }
        for &(l, z, days) in &edges {
            let mut coeffs = vec![
                (beta[t][z].expect("zone has an edge"), 1.0),
                (gamma[t][l], 1.0),
            ];
            if let Some(mv) = mu[t][l] {
                coeffs.push((mv, 1.0));
            }
            if let (Some(nv), Some(a)) = (nu[t], window_coeff(inst, days)) {
                coeffs.push((nv, -a));
            }
            m.add_constraint(
                format!("ship_{t}_{l}_{z}"),
                coeffs,
                Sense::Ge,
                e.online_price[t] + e.online_penalty[t] - e.fulfill_cost[l][z],
            );
        }
    }

    Ok(SubproblemModel {
        model: m,
        alpha,
        beta,
        gamma,
        choices: Vec::new(),
        periods,
        nodes: n,
        zones: nz,
    })
}

/// LP dual of the recourse problem at one fixed scenario. Its optimum equals
/// the recourse profit of that scenario.
pub fn build_dual_recourse(
    inst: &Instance,
    alloc: &Allocation,
    scen: &DemandScenario,
    cfg: &BioConfig,
) -> Result<SubproblemModel> {
    let mut sp = dual_core(inst, alloc, cfg)?;
    let e = &inst.econ;
    let (lb, lo) = (1.0 - cfg.lambda_walkin(), 1.0 - cfg.lambda_online());
    let mut constant = 0.0;
    for t in 0..sp.periods {
        for l in 0..sp.nodes {
            let d = scen.walkin[t][l];
            sp.model.add_objective_coeff(sp.alpha[t][l], lb * d);
            constant -= e.walkin_penalty[t][l] * lb * d;
        }
        for z in 0..sp.zones {
            let d = scen.online[t][z];
            if let Some(b) = sp.beta[t][z] {
                sp.model.add_objective_coeff(b, lo * d);
            }
            constant -= e.online_penalty[t] * lo * d;
        }
    }
    sp.model.objective_constant = constant;
    Ok(sp)
}

/// Exact worst-case subproblem over the uncertainty set. Each demand cell is
/// picked from its integer range by binaries, and the bilinear products with
/// α and β are linearized with the bounds from [`big_m`].
pub fn build_subproblem(
    inst: &Instance,
    set: &UncertaintySet,
    alloc: &Allocation,
    cfg: &BioConfig,
) -> Result<SubproblemModel> {
    set.check_against(inst)?;
    let size: u128 = [&set.walkin, &set.online]
        .iter()
        .flat_map(|b| b.lower.iter().flatten().zip(b.upper.iter().flatten()))
        .map(|(&lo, &hi)| (hi - lo) as u128 + 1)
        .sum();
    if size > DISCRETE_POINT_CAP {
        return Err(Error::CapExceeded {
            what: "subproblem demand choices".into(),
            size,
            cap: DISCRETE_POINT_CAP,
        });
    }
    let mut sp = build_dual_recourse(
        inst,
        alloc,
        &DemandScenario::zeros(inst.horizon, inst.num_nodes(), inst.num_zones()),
        cfg,
    )?;
    let (m_b, m_o) = big_m(inst);
    let e = &inst.econ;
    let (lb, lo) = (1.0 - cfg.lambda_walkin(), 1.0 - cfg.lambda_online());

    for channel in [Channel::Walkin, Channel::Online] {
        let bounds: &ChannelBounds = set.channel(channel);
        for t in 0..sp.periods {
            let mut budget = Vec::new();
            for k in 0..bounds.width() {
                let (dual, weight, penalty, big) = match channel {
                    Channel::Walkin => {
                        (Some(sp.alpha[t][k]), lb, e.walkin_penalty[t][k], m_b[t][k])
                    }
                    Channel::Online => (sp.beta[t][k], lo, e.online_penalty[t], m_o[t][k]),
                };
                let mut pick = Vec::new();
                let mut link = Vec::new();
                for v in bounds.lower[t][k]..=bounds.upper[t][k] {
                    let value = f64::from(v);
                    let w = sp.model.binary(format!("w_{channel:?}_{t}_{k}_{v}"));
                    pick.push((w, 1.0));
                    budget.push((w, value));
                    sp.model.add_objective_coeff(w, -penalty * weight * value);
                    let mut prod_pair = None;
                    if let Some(d) = dual {
                        let prod =
                            sp.model
                                .continuous(format!("p_{channel:?}_{t}_{k}_{v}"), 0.0, big);
                        sp.model.add_objective_coeff(prod, weight * value);
                        sp.model.add_constraint(
                            format!("lin_{channel:?}_{t}_{k}_{v}"),
                            vec![(prod, 1.0), (w, -big)],
                            Sense::Le,
                            0.0,
                        );
                        link.push((prod, 1.0));
                        prod_pair = Some((prod, d));
                    }
                    sp.choices.push(Choice {
                        channel,
                        t,
                        k,
                        value,
                        w,
                        prod: prod_pair,
                    });
                }
                sp.model
                    .add_constraint(format!("one_{channel:?}_{t}_{k}"), pick, Sense::Eq, 1.0);
                if let Some(d) = dual {
                    link.push((d, -1.0));
                    sp.model.add_constraint(
                        format!("sum_{channel:?}_{t}_{k}"),
                        link,
                        Sense::Eq,
                        0.0,
                    );
                }
            }
            if bounds.width() > 0 {
                let hi: u32 = bounds.upper[t].iter().sum();
                let lo_sum: u32 = bounds.lower[t].iter().sum();
                if bounds.budget_upper[t] < hi {
                    sp.model.add_constraint(
                        format!("bud_hi_{channel:?}_{t}"),
                        budget.clone(),
                        Sense::Le,
                        f64::from(bounds.budget_upper[t]),
                    );
                }
                if bounds.budget_lower[t] > lo_sum {
                    sp.model.add_constraint(
                        format!("bud_lo_{channel:?}_{t}"),
                        budget,
                        Sense::Ge,
                        f64::from(bounds.budget_lower[t]),
                    );
                }
            }
        }
    }
    Ok(sp)
}

/// Demand scenario selected by the binaries of an exact subproblem solution.
pub fn extract_worst_scenario(sp: &SubproblemModel, sol: &Solution) -> Result<DemandScenario> {
    if sp.choices.is_empty() && (sp.nodes + sp.zones) > 0 && sp.periods > 0 {
        return Err(Error::InvalidArgument("model has no demand choices".into()));
    }
    if !sol.has_values() {
        return Err(Error::InvalidArgument("solution carries no values".into()));
    }
    let mut scen = DemandScenario::zeros(sp.periods, sp.nodes, sp.zones);
    for c in &sp.choices {
        if sol.value(c.w) > 0.5 {
            scen.channel_mut(c.channel)[c.t][c.k] = c.value;
        }
    }
    Ok(scen)
}

/// Scenario in the set minimizing the recourse dual objective for fixed
/// duals. Box plus budget per channel and period is a continuous knapsack,
/// so a greedy fill by unit cost is exact and lands on integers.
pub fn demand_response(
    inst: &Instance,
    set: &UncertaintySet,
    duals: &DualValues,
    cfg: &BioConfig,
) -> DemandScenario {
    let e = &inst.econ;
    let (lb, lo) = (1.0 - cfg.lambda_walkin(), 1.0 - cfg.lambda_online());
    let periods = inst.horizon;
    let mut scen = DemandScenario::zeros(periods, inst.num_nodes(), inst.num_zones());
    for channel in [Channel::Walkin, Channel::Online] {
        let bounds = set.channel(channel);
        for t in 0..periods {
            let cost: Vec<f64> = (0..bounds.width())
                .map(|k| match channel {
                    Channel::Walkin => lb * (duals.alpha[t][k] - e.walkin_penalty[t][k]),
                    Channel::Online => lo * (duals.beta[t][k] - e.online_penalty[t]),
                })
                .collect();
            let mut order: Vec<usize> = (0..cost.len()).collect();
            order.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
            let mut d: Vec<u32> = bounds.lower[t].clone();
            let mut total: u32 = d.iter().sum();
            for &k in &order {
                if total >= bounds.budget_lower[t] {
                    break;
                }
                let add = (bounds.upper[t][k] - d[k]).min(bounds.budget_lower[t] - total);
                d[k] += add;
                total += add;
            }
            for &k in &order {
                if cost[k] >= 0.0 || total >= bounds.budget_upper[t] {
                    break;
                }
                let add = (bounds.upper[t][k] - d[k]).min(bounds.budget_upper[t] - total);
                d[k] += add;
                total += add;
            }
            scen.channel_mut(channel)[t] = d.into_iter().map(f64::from).collect();
        }
    }
    scen
}
