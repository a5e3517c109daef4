use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solver::{LinearModel, ObjectiveSense, Sense, Solution, VarId, VarKind};
use crate::uncertainty::{Channel, DemandScenario, UncertaintySet};

use super::{add_recourse_block, Allocation, BioConfig, LinExpr};

/// Master problem over a pool of scenarios.
pub struct MasterModel {
    pub model: LinearModel,
    /// Worst recourse value over the pool; absent when the pool is empty.
    pub eta: Option<VarId>,
    x: Vec<Vec<VarId>>,
    x_repo: Option<Vec<Vec<Vec<Option<VarId>>>>>,
    s_plus: Option<Vec<Vec<VarId>>>,
    y_plus: Option<Vec<Vec<(usize, usize, VarId)>>>,
    d_walkin: Option<Vec<Vec<VarId>>>,
    d_online: Option<Vec<Vec<VarId>>>,
    zones: usize,
}

impl MasterModel {
    /// Pin the order variables to `x`; everything else stays free.
    pub fn pin_orders(&mut self, x: &[Vec<f64>]) -> Result<()> {
        if x.len() != self.x.len() || x.iter().zip(&self.x).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::Dimension(
                "pinned orders do not match the master".into(),
            ));
        }
        for (vars, vals) in self.x.iter().zip(x) {
            for (&v, &q) in vars.iter().zip(vals) {
                let var = &mut self.model.variables[v.0];
                var.lower = q;
                var.upper = q;
            }
        }
        Ok(())
    }

    pub fn allocation(&self, sol: &Solution) -> Allocation {
        let grid = |g: &Vec<Vec<VarId>>| -> Vec<Vec<f64>> {
            g.iter()
                .map(|r| r.iter().map(|&v| clean(sol.value(v))).collect())
                .collect()
        };
        let n = self.x.first().map_or(0, Vec::len);
        Allocation {
            x: grid(&self.x),
            x_repo: self.x_repo.as_ref().map(|r| {
                r.iter()
                    .map(|m| {
                        m.iter()
                            .map(|row| {
                                row.iter()
                                    .map(|v| v.map_or(0.0, |v| clean(sol.value(v))))
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            }),
            s_plus: self.s_plus.as_ref().map(grid),
            y_plus: self.y_plus.as_ref().map(|rows| {
                rows.iter()
                    .map(|row| {
                        let mut m = vec![vec![0.0; self.zones]; n];
                        for &(l, z, v) in row {
                            m[l][z] = clean(sol.value(v));
                        }
                        m
                    })
                    .collect()
            }),
        }
    }

    /// Optimistic demand chosen by the master, if λ is positive.
    pub fn d_plus(&self, sol: &Solution) -> Option<DemandScenario> {
        if self.d_walkin.is_none() && self.d_online.is_none() {
            return None;
        }
        let periods = self.x.len();
        let n = self.x.first().map_or(0, Vec::len);
        let mut d = DemandScenario::zeros(periods, n, self.zones);
        for (grid, ch) in [
            (&self.d_walkin, Channel::Walkin),
            (&self.d_online, Channel::Online),
        ] {
            if let Some(g) = grid {
                for (t, row) in g.iter().enumerate() {
                    for (k, &v) in row.iter().enumerate() {
                        d.channel_mut(ch)[t][k] = clean(sol.value(v));
                    }
                }
            }
        }
        Some(d)
    }
}

fn clean(v: f64) -> f64 {
    if v.abs() < 1e-9 {
        0.0
    } else {
        v
    }
}

fn demand_vars(
    m: &mut LinearModel,
    set: &UncertaintySet,
    ch: Channel,
    tag: &str,
) -> Vec<Vec<VarId>> {
    let b = set.channel(ch);
    (0..b.periods())
        .map(|t| {
            let vars: Vec<VarId> = (0..b.width())
                .map(|k| {
                    m.continuous(
                        format!("{tag}_{t}_{k}"),
                        f64::from(b.lower[t][k]),
                        f64::from(b.upper[t][k]),
                    )
                })
                .collect();
            if !vars.is_empty() {
                let row: Vec<(VarId, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
                m.add_constraint(
                    format!("{tag}_lo_{t}"),
                    row.clone(),
                    Sense::Ge,
                    f64::from(b.budget_lower[t]),
                );
                m.add_constraint(
                    format!("{tag}_hi_{t}"),
                    row,
                    Sense::Le,
                    f64::from(b.budget_upper[t]),
                );
            }
            vars
        })
        .collect()
}

/// Master problem: first-stage decisions, optimistic sales and demand, and
/// one copy of the fulfillment problem per pooled scenario, all tied to a
/// single epigraph variable.
pub fn build_master(
    inst: &Instance,
    set: &UncertaintySet,
    scenarios: &[DemandScenario],
    cfg: &BioConfig,
) -> Result<MasterModel> {
    inst.check_structure()?;
    set.check_against(inst)?;
    cfg.check_instance(inst)?;
    let (periods, n, nz) = (inst.horizon, inst.num_nodes(), inst.num_zones());
    let e = &inst.econ;
    let (lam_b, lam_o) = (cfg.lambda_walkin(), cfg.lambda_online());
    let mut m = LinearModel::new(ObjectiveSense::Maximize);
    let kind = if cfg.integer_allocations {
        VarKind::Integer
    } else {
        VarKind::Continuous
    };
    let int_cap = if cfg.integer_allocations {
        let stock: f64 = inst.inventory.pipeline.iter().flatten().sum();
        (set.max_total_demand() + stock).ceil()
    } else {
        f64::INFINITY
    };

    let x: Vec<Vec<VarId>> = (0..periods)
        .map(|t| {
            (0..n)
                .map(|l| {
                    let cap = inst
                        .business_rules
                        .transport_capacity
                        .as_ref()
                        .map_or(f64::INFINITY, |c| c[t][l]);
                    let v = m.add_var(format!("x_{t}_{l}"), 0.0, cap.min(int_cap), kind);
                    m.add_objective_coeff(v, -e.purchase_cost[l]);
                    v
                })
                .collect()
        })
        .collect();

    let x_repo = if cfg.repositioning {
        let rc = e.reposition_cost.as_ref().expect("checked by BioConfig");
        Some(
            (0..periods)
                .map(|t| {
                    (0..n)
                        .map(|a| {
                            (0..n)
                                .map(|b| {
                                    (a != b).then(|| {
                                        let v =
                                            m.add_var(format!("r_{t}_{a}_{b}"), 0.0, int_cap, kind);
                                        m.add_objective_coeff(v, -rc[a][b]);
                                        v
                                    })
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect::<Vec<Vec<Vec<Option<VarId>>>>>(),
        )
    } else {
        None
    };

    let (s_plus, d_walkin) = if lam_b > 0.0 {
        let d = demand_vars(&mut m, set, Channel::Walkin, "dpb");
        let s: Vec<Vec<VarId>> = (0..periods)
            .map(|t| {
                (0..n)
                    .map(|l| {
                        let v = m.continuous(format!("sp_{t}_{l}"), 0.0, f64::INFINITY);
                        m.add_objective_coeff(v, e.walkin_price[t][l] + e.walkin_penalty[t][l]);
                        m.add_objective_coeff(d[t][l], -e.walkin_penalty[t][l] * lam_b);
                        m.add_constraint(
                            format!("spcap_{t}_{l}"),
                            vec![(v, 1.0), (d[t][l], -lam_b)],
                            Sense::Le,
                            0.0,
                        );
                        v
                    })
                    .collect()
            })
            .collect();
        (Some(s), Some(d))
    } else {
        (None, None)
    };

    let (y_plus, d_online) = if lam_o > 0.0 {
        let edges = inst.fulfillment_edges();
        let d = demand_vars(&mut m, set, Channel::Online, "dpo");
        let mut all = Vec::with_capacity(periods);
        for t in 0..periods {
            let row: Vec<(usize, usize, VarId)> = edges
                .iter()
                .map(|&(l, z, _)| {
                    let v = m.continuous(format!("yp_{t}_{l}_{z}"), 0.0, f64::INFINITY);
                    m.add_objective_coeff(
                        v,
                        e.online_price[t] + e.online_penalty[t] - e.fulfill_cost[l][z],
                    );
                    (l, z, v)
                })
                .collect();
            for z in 0..nz {
                m.add_objective_coeff(d[t][z], -e.online_penalty[t] * lam_o);
                let mut coeffs: Vec<(VarId, f64)> = row
                    .iter()
                    .filter(|r| r.1 == z)
                    .map(|r| (r.2, 1.0))
                    .collect();
                if !coeffs.is_empty() {
                    coeffs.push((d[t][z], -lam_o));
                    m.add_constraint(format!("ypcap_{t}_{z}"), coeffs, Sense::Le, 0.0);
                }
            }
            all.push(row);
        }
        (Some(all), Some(d))
    } else {
        (None, None)
    };

    let mut supply = vec![vec![LinExpr::default(); n]; periods];
    for t in 0..periods {
        for l in 0..n {
            let s = &mut supply[t][l];
            s.constant =
                inst.pipeline_arrival(l, t) + if t == 0 { inst.initial_on_hand(l) } else { 0.0 };
            let lead = inst.lead_time(l);
            if t >= lead {
                s.add(x[t - lead][l], 1.0);
            }
            if let Some(r) = &x_repo {
                for k in 0..n {
                    if k == l {
                        continue;
                    }
                    let lk = inst.reposition_lead(k, l);
                    if t >= lk {
                        s.add(r[t - lk][k][l].expect("off-diagonal"), 1.0);
                    }
                    s.add(r[t][l][k].expect("off-diagonal"), -1.0);
                }
            }
            if let Some(sp) = &s_plus {
                s.add(sp[t][l], -1.0);
            }
            if let Some(yp) = &y_plus {
                for &(ll, _, v) in &yp[t] {
                    if ll == l {
                        s.add(v, -1.0);
                    }
                }
            }
        }
    }

    let eta = (!scenarios.is_empty()).then(|| {
        let v = m.continuous("eta", f64::NEG_INFINITY, f64::INFINITY);
        m.add_objective_coeff(v, 1.0);
        v
    });
    for (i, scen) in scenarios.iter().enumerate() {
        let block =
            add_recourse_block(&mut m, inst, scen, lam_b, lam_o, &supply, &format!("c{i}_"));
        let mut coeffs = vec![(eta.expect("pool not empty"), 1.0)];
        coeffs.extend(block.objective.terms.iter().map(|&(v, c)| (v, -c)));
        m.add_constraint(
            format!("cut_{i}"),
            coeffs,
            Sense::Le,
            block.objective.constant,
        );
    }

    Ok(MasterModel {
        model: m,
        eta,
        x,
        x_repo,
        s_plus,
        y_plus,
        d_walkin,
        d_online,
        zones: nz,
    })
}
