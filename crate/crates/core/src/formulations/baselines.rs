use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solver::{self, LinearModel, ObjectiveSense, Sense, Status, VarId};
use crate::uncertainty::{poisson_quantile, MeanDemand};

use super::Allocation;

/// Deterministic two-class model: the mean demand at full value and the
/// excess up to a high quantile at a discounted value.
pub struct PwlModel {
    pub model: LinearModel,
    x: Vec<Vec<VarId>>,
}

impl PwlModel {
    pub fn allocation(&self, sol: &solver::Solution) -> Allocation {
        Allocation {
            x: self
                .x
                .iter()
                .map(|r| r.iter().map(|&v| sol.value(v)).collect())
                .collect(),
            x_repo: None,
            s_plus: None,
            y_plus: None,
        }
    }
}

pub fn build_pwl_baseline(
    inst: &Instance,
    mean: &MeanDemand,
    quantile: &MeanDemand,
    discount: f64,
) -> Result<PwlModel> {
    inst.check_structure()?;
    if !(0.0..=1.0).contains(&discount) {
        return Err(Error::InvalidArgument(format!(
            "discount {discount} outside [0, 1]"
        )));
    }
    let (periods, n, nz) = (inst.horizon, inst.num_nodes(), inst.num_zones());
    for d in [mean, quantile] {
        if d.walkin.len() != periods
            || d.online.len() != periods
            || d.walkin.iter().any(|r| r.len() != n)
            || d.online.iter().any(|r| r.len() != nz)
        {
            return Err(Error::Dimension(
                "demand grid does not match the instance".into(),
            ));
        }
    }
    let e = &inst.econ;
    let edges = inst.fulfillment_edges();
    let mut m = LinearModel::new(ObjectiveSense::Maximize);
    let weights = [1.0, discount];

    let x: Vec<Vec<VarId>> = (0..periods)
        .map(|t| {
            (0..n)
                .map(|l| {
                    let v = m.continuous(format!("x_{t}_{l}"), 0.0, f64::INFINITY);
                    m.add_objective_coeff(v, -e.purchase_cost[l]);
                    v
                })
                .collect()
        })
        .collect();
    let inv: Vec<Vec<VarId>> = (0..periods)
        .map(|t| {
            (0..n)
                .map(|l| {
                    let v = m.continuous(format!("I_{}_{l}", t + 1), 0.0, f64::INFINITY);
                    m.add_objective_coeff(v, -e.holding[l]);
                    v
                })
                .collect()
        })
        .collect();

    for t in 0..periods {
        let mut out: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n];
        for l in 0..n {
            let sizes = [
                mean.walkin[t][l],
                (quantile.walkin[t][l] - mean.walkin[t][l]).max(0.0),
            ];
            for (c, (&size, &w)) in sizes.iter().zip(&weights).enumerate() {
                let s = m.continuous(format!("s{c}_{t}_{l}"), 0.0, size);
                m.add_objective_coeff(s, w * (e.walkin_price[t][l] + e.walkin_penalty[t][l]));
                m.objective_constant -= w * e.walkin_penalty[t][l] * size;
                out[l].push((s, 1.0));
            }
        }
        for z in 0..nz {
            let sizes = [
                mean.online[t][z],
                (quantile.online[t][z] - mean.online[t][z]).max(0.0),
            ];
            for (c, (&size, &w)) in sizes.iter().zip(&weights).enumerate() {
                m.objective_constant -= w * e.online_penalty[t] * size;
                let mut row = Vec::new();
                for &(l, _, _) in edges.iter().filter(|ed| ed.1 == z) {
                    let y = m.continuous(format!("y{c}_{t}_{l}_{z}"), 0.0, f64::INFINITY);
                    m.add_objective_coeff(
                        y,
                        w * (e.online_price[t] + e.online_penalty[t] - e.fulfill_cost[l][z]),
                    );
                    out[l].push((y, 1.0));
                    row.push((y, 1.0));
                }
                if !row.is_empty() {
                    m.add_constraint(format!("on{c}_{t}_{z}"), row, Sense::Le, size);
                }
            }
        }
        for (l, mut coeffs) in out.into_iter().enumerate() {
            coeffs.push((inv[t][l], 1.0));
            if t > 0 {
                coeffs.push((inv[t - 1][l], -1.0));
            }
            let lead = inst.lead_time(l);
            if t >= lead {
                coeffs.push((x[t - lead][l], -1.0));
            }
            let mut rhs = inst.pipeline_arrival(l, t);
            if t == 0 {
                rhs += inst.initial_on_hand(l);
            }
            m.add_constraint(format!("bal_{t}_{l}"), coeffs, Sense::Eq, rhs);
        }
    }
    Ok(PwlModel { model: m, x })
}

/// Solve the two-class model and return its orders.
pub fn pwl_allocation(
    inst: &Instance,
    mean: &MeanDemand,
    quantile: &MeanDemand,
    discount: f64,
) -> Result<Allocation> {
    let pm = build_pwl_baseline(inst, mean, quantile, discount)?;
    let sol = solver::solve(&pm.model)?;
    if sol.status != Status::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            context: "two-class baseline".into(),
        });
    }
    Ok(pm.allocation(&sol))
}

/// Margin over price, clamped to `[0, 1]`. Zero when the price is zero.
pub fn critical_ratio(price: f64, cost: f64) -> f64 {
    if price <= 0.0 {
        0.0
    } else {
        ((price - cost) / price).clamp(0.0, 1.0)
    }
}

fn position(inst: &Instance, l: usize) -> f64 {
    inst.inventory.pipeline[l].iter().sum()
}

/// Order-up-to policy with Poisson demand, all orders placed in period 0.
///
/// Each store covers its walk-in demand over lead time plus one period at
/// its critical ratio. Online demand is covered at chain level: the
/// warehouses together with store stock above the store levels protect the
/// online demand, and the chain order is split among warehouses in
/// proportion to their own order-up-to shortfalls, each warehouse covering
/// the zones it ships to most cheaply.
pub fn basestock_policy(inst: &Instance, means: &MeanDemand) -> Result<Allocation> {
    inst.check_structure()?;
    let (periods, n, nz) = (inst.horizon, inst.num_nodes(), inst.num_zones());
    if means.walkin.len() != periods || means.online.len() != periods {
        return Err(Error::Dimension(
            "mean demand does not match the horizon".into(),
        ));
    }
    let e = &inst.econ;
    let cover = |l: usize| (inst.lead_time(l) + 1).min(periods);
    let mut orders = vec![0.0; n];
    let mut store_excess = 0.0;
    for l in 0..n {
        if inst.is_warehouse(l) {
            continue;
        }
        let mu: f64 = (0..cover(l)).map(|t| means.walkin[t][l]).sum();
        let cr = critical_ratio(e.walkin_price[0][l], e.purchase_cost[l]);
        let level = f64::from(poisson_quantile(mu, cr));
        let ip = position(inst, l);
        orders[l] = (level - ip).max(0.0);
        store_excess += (ip - level).max(0.0);
    }

    let warehouses: Vec<usize> = (0..n).filter(|&l| inst.is_warehouse(l)).collect();
    if !warehouses.is_empty() && nz > 0 {
        let avg_cost =
            warehouses.iter().map(|&w| e.purchase_cost[w]).sum::<f64>() / warehouses.len() as f64;
        let mut ship = Vec::new();
        for &w in &warehouses {
            for z in 0..nz {
                ship.push(e.fulfill_cost[w][z]);
            }
        }
        let avg_ship = ship.iter().sum::<f64>() / ship.len() as f64;
        let cr = critical_ratio(e.online_price[0], avg_cost + avg_ship);
        let horizon_cover = warehouses.iter().map(|&w| cover(w)).max().unwrap_or(1);
        let chain_mu: f64 = (0..horizon_cover)
            .map(|t| means.online[t].iter().sum::<f64>())
            .sum();
        let chain_level = f64::from(poisson_quantile(chain_mu, cr));
        let chain_position: f64 =
            warehouses.iter().map(|&w| position(inst, w)).sum::<f64>() + store_excess;
        let chain_order = (chain_level - chain_position).max(0.0);

        let mut own_level = vec![0.0; warehouses.len()];
        for z in 0..nz {
            let (i, _) = warehouses
                .iter()
                .enumerate()
                .min_by(|a, b| e.fulfill_cost[*a.1][z].total_cmp(&e.fulfill_cost[*b.1][z]))
                .expect("nonempty");
            let w = warehouses[i];
            own_level[i] += (0..cover(w)).map(|t| means.online[t][z]).sum::<f64>();
        }
        let levels: Vec<f64> = own_level
            .iter()
            .map(|&mu| f64::from(poisson_quantile(mu, cr)))
            .collect();
        let shortfall: Vec<f64> = warehouses
            .iter()
            .zip(&levels)
            .map(|(&w, &s)| (s - position(inst, w)).max(0.0))
            .collect();
        let weights = if shortfall.iter().sum::<f64>() > 0.0 {
            shortfall
        } else if levels.iter().sum::<f64>() > 0.0 {
            levels
        } else {
            vec![1.0; warehouses.len()]
        };
        let total: f64 = weights.iter().sum();
        for (&w, &wt) in warehouses.iter().zip(&weights) {
            orders[w] = chain_order * wt / total;
        }
    }
    Ok(Allocation::first_period(periods, &orders))
}
