//! Builders that turn an instance, an uncertainty set and a configuration
//! into concrete linear models.

mod baselines;
mod fulfillment;
mod master;
mod subproblem;

pub use baselines::{
    basestock_policy, build_pwl_baseline, critical_ratio, pwl_allocation, PwlModel,
};
pub use fulfillment::{build_fulfillment_model, evaluate_allocation, FulfillmentModel};
pub use master::{build_master, MasterModel};
pub use subproblem::{
    build_dual_recourse, build_subproblem, demand_response, extract_worst_scenario, DualValues,
    SubproblemModel,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solver::{LinearModel, Sense, VarId};
use crate::uncertainty::DemandScenario;

/// First-stage decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Allocation {
    /// `x[t][l]`: units ordered from the supplier for node `l` in period `t`.
    pub x: Vec<Vec<f64>>,
    /// `x_repo[t][from][to]`: units moved between nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_repo: Option<Vec<Vec<Vec<f64>>>>,
    /// Optimistic walk-in sales committed in stage one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_plus: Option<Vec<Vec<f64>>>,
    /// Optimistic online fulfillment `y_plus[t][l][z]` when both channels are
    /// allied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_plus: Option<Vec<Vec<Vec<f64>>>>,
}

impl Allocation {
    pub fn zeros(periods: usize, nodes: usize) -> Self {
        Self {
            x: vec![vec![0.0; nodes]; periods],
            x_repo: None,
            s_plus: None,
            y_plus: None,
        }
    }

    /// Allocation ordering `per_node[l]` in period 0 only.
    pub fn first_period(periods: usize, per_node: &[f64]) -> Self {
        let mut a = Self::zeros(periods, per_node.len());
        a.x[0] = per_node.to_vec();
        a
    }

    /// Same first-stage orders with the optimistic part dropped.
    pub fn orders_only(&self) -> Self {
        Self {
            x: self.x.clone(),
            x_repo: self.x_repo.clone(),
            s_plus: None,
            y_plus: None,
        }
    }

    pub fn total_units(&self) -> f64 {
        self.x.iter().flatten().sum()
    }

    pub fn check_against(&self, inst: &Instance) -> Result<()> {
        let (t, n, nz) = (inst.horizon, inst.num_nodes(), inst.num_zones());
        let bad =
            |what: &str| Error::Dimension(format!("allocation {what} does not match the instance"));
        if self.x.len() != t || self.x.iter().any(|r| r.len() != n) {
            return Err(bad("x"));
        }
        if let Some(r) = &self.x_repo {
            if r.len() != t
                || r.iter()
                    .any(|m| m.len() != n || m.iter().any(|row| row.len() != n))
            {
                return Err(bad("x_repo"));
            }
        }
        if let Some(s) = &self.s_plus {
            if s.len() != t || s.iter().any(|r| r.len() != n) {
                return Err(bad("s_plus"));
            }
        }
        if let Some(y) = &self.y_plus {
            if y.len() != t
                || y.iter()
                    .any(|m| m.len() != n || m.iter().any(|r| r.len() != nz))
            {
                return Err(bad("y_plus"));
            }
        }
        let all = self
            .x
            .iter()
            .flatten()
            .chain(self.x_repo.iter().flatten().flatten().flatten())
            .chain(self.s_plus.iter().flatten().flatten())
            .chain(self.y_plus.iter().flatten().flatten().flatten());
        for v in all {
            if !(*v >= -1e-9) {
                return Err(Error::InvalidArgument(format!(
                    "allocation entry {v} is negative"
                )));
            }
        }
        Ok(())
    }
}

/// Optimal second-stage decisions for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FulfillmentPlan {
    /// `walkin_sales[t][l]`.
    pub walkin_sales: Vec<Vec<f64>>,
    /// `fulfillment[t][l][z]`.
    pub fulfillment: Vec<Vec<Vec<f64>>>,
    /// End-of-period on hand `inventory[t][l]`.
    pub inventory: Vec<Vec<f64>>,
    pub profit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlliedChannels {
    #[default]
    WalkinOnly,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BioConfig {
    pub lambda: f64,
    #[serde(default)]
    pub allied_channels: AlliedChannels,
    #[serde(default)]
    pub integer_allocations: bool,
    #[serde(default)]
    pub repositioning: bool,
}

impl Default for BioConfig {
    fn default() -> Self {
        Self::with_lambda(0.0)
    }
}

impl BioConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            allied_channels: AlliedChannels::WalkinOnly,
            integer_allocations: false,
            repositioning: false,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!(
                "lambda {} outside [0, 1]",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Optimism weight applied to walk-in demand.
    pub fn lambda_walkin(&self) -> f64 {
        self.lambda
    }

    /// Optimism weight applied to online demand.
    pub fn lambda_online(&self) -> f64 {
        match self.allied_channels {
            AlliedChannels::WalkinOnly => 0.0,
            AlliedChannels::Both => self.lambda,
        }
    }

    pub(crate) fn check_instance(&self, inst: &Instance) -> Result<()> {
        self.check()?;
        if self.repositioning
            && (inst.econ.reposition_cost.is_none() || inst.inventory.reposition_lead.is_none())
        {
            return Err(Error::InvalidArgument(
                "repositioning requires econ.reposition_cost and inventory.reposition_lead".into(),
            ));
        }
        if self.lambda_online() > 0.0
            && (inst.business_rules.fulfillment_capacity.is_some()
                || inst.business_rules.service_window.is_some())
        {
            return Err(Error::InvalidArgument(
                "fulfillment business rules are not supported with optimism on both channels"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Sparse affine expression over model variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: vec![],
            constant: c,
        }
    }

    pub fn add(&mut self, v: VarId, c: f64) {
        if c != 0.0 {
            self.terms.push((v, c));
        }
    }
}

/// Variables of one scenario's fulfillment problem inside a larger model.
pub(crate) struct RecourseBlock {
    pub sales: Vec<Vec<VarId>>,
    /// Per period, `(node, zone, var)` for each fulfillment edge.
    pub ship: Vec<Vec<(usize, usize, VarId)>>,
    pub inventory: Vec<Vec<VarId>>,
    pub objective: LinExpr,
}

/// Coefficient of an edge in the service-window row.
pub(crate) fn window_coeff(inst: &Instance, days: u32) -> Option<f64> {
    let sw = inst.business_rules.service_window.as_ref()?;
    if sw.target_fraction <= 0.0 {
        return None;
    }
    Some(if days <= sw.max_days {
        1.0 - sw.target_fraction
    } else {
        -sw.target_fraction
    })
}

/// Add sales, fulfillment and inventory variables for one scenario.
///
/// `supply[t][l]` is everything entering node `l` in period `t` other than
/// carried stock: initial on hand at `t = 0`, pipeline arrivals, lead-time
/// shifted orders and repositioning, net of optimistic sales.
pub(crate) fn add_recourse_block(
    m: &mut LinearModel,
    inst: &Instance,
    scen: &DemandScenario,
    lam_b: f64,
    lam_o: f64,
    supply: &[Vec<LinExpr>],
    tag: &str,
) -> RecourseBlock {
    let (periods, n, nz) = (inst.horizon, inst.num_nodes(), inst.num_zones());
    let e = &inst.econ;
    let edges = inst.fulfillment_edges();
    let mut obj = LinExpr::default();
    let mut sales = Vec::with_capacity(periods);
    let mut ship = Vec::with_capacity(periods);
    let mut inventory = Vec::with_capacity(periods);

    for t in 0..periods {
        let mut row_s = Vec::with_capacity(n);
        let mut row_i = Vec::with_capacity(n);
        for l in 0..n {
            let d = scen.walkin[t][l];
            let cap = ((1.0 - lam_b) * d).max(0.0);
            let s = m.continuous(format!("{tag}s_{t}_{l}"), 0.0, cap);
            obj.add(s, e.walkin_price[t][l] + e.walkin_penalty[t][l]);
            obj.constant -= e.walkin_penalty[t][l] * (1.0 - lam_b) * d;
            row_s.push(s);
            let i = m.continuous(format!("{tag}I_{}_{l}", t + 1), 0.0, f64::INFINITY);
            obj.add(i, -e.holding[l]);
            row_i.push(i);
        }
        let mut row_y = Vec::with_capacity(edges.len());
        for &(l, z, _) in &edges {
            let y = m.continuous(format!("{tag}y_{t}_{l}_{z}"), 0.0, f64::INFINITY);
            obj.add(
                y,
                e.online_price[t] + e.online_penalty[t] - e.fulfill_cost[l][z],
            );
            row_y.push((l, z, y));
        }
        for z in 0..nz {
            obj.constant -= e.online_penalty[t] * (1.0 - lam_o) * scen.online[t][z];
        }
        sales.push(row_s);
        ship.push(row_y);
        inventory.push(row_i);
    }

    for t in 0..periods {
        for l in 0..n {
            let mut coeffs = vec![(sales[t][l], 1.0), (inventory[t][l], 1.0)];
            for &(ll, _, y) in &ship[t] {
                if ll == l {
                    coeffs.push((y, 1.0));
                }
            }
            if t > 0 {
                coeffs.push((inventory[t - 1][l], -1.0));
            }
            let sup = &supply[t][l];
            for &(v, c) in &sup.terms {
                coeffs.push((v, -c));
            }
            m.add_constraint(format!("{tag}bal_{t}_{l}"), coeffs, Sense::Eq, sup.constant);
        }
        for z in 0..nz {
            let coeffs: Vec<(VarId, f64)> = ship[t]
                .iter()
                .filter(|e| e.1 == z)
                .map(|e| (e.2, 1.0))
                .collect();
            if !coeffs.is_empty() {
                let cap = ((1.0 - lam_o) * scen.online[t][z]).max(0.0);
                m.add_constraint(format!("{tag}on_{t}_{z}"), coeffs, Sense::Le, cap);
            }
        }
        if let Some(caps) = &inst.business_rules.fulfillment_capacity {
            for l in 0..n {
                let coeffs: Vec<(VarId, f64)> = ship[t]
                    .iter()
                    .filter(|e| e.0 == l)
                    .map(|e| (e.2, 1.0))
                    .collect();
                if !coeffs.is_empty() {
                    m.add_constraint(format!("{tag}fcap_{t}_{l}"), coeffs, Sense::Le, caps[t][l]);
                }
            }
        }
        if inst.business_rules.service_window.is_some() && !ship[t].is_empty() {
            let coeffs: Vec<(VarId, f64)> = ship[t]
                .iter()
                .zip(&edges)
                .filter_map(|(&(_, _, y), &(_, _, days))| window_coeff(inst, days).map(|c| (y, c)))
                .collect();
            if !coeffs.is_empty() {
                m.add_constraint(format!("{tag}win_{t}"), coeffs, Sense::Ge, 0.0);
            }
        }
    }

    RecourseBlock {
        sales,
        ship,
        inventory,
        objective: obj,
    }
}

/// Numeric supply for fixed first-stage decisions, see [`add_recourse_block`].
pub(crate) fn supply_constants(inst: &Instance, alloc: &Allocation) -> Vec<Vec<f64>> {
    let (periods, n) = (inst.horizon, inst.num_nodes());
    let mut out = vec![vec![0.0; n]; periods];
    for t in 0..periods {
        for l in 0..n {
            let mut v = inst.pipeline_arrival(l, t);
            if t == 0 {
                v += inst.initial_on_hand(l);
            }
            let lead = inst.lead_time(l);
            if t >= lead {
                v += alloc.x[t - lead][l];
            }
            if let Some(r) = &alloc.x_repo {
                for k in 0..n {
                    if k == l {
                        continue;
                    }
                    let lk = inst.reposition_lead(k, l);
                    if t >= lk {
                        v += r[t - lk][k][l];
                    }
                    v -= r[t][l][k];
                }
            }
            if let Some(s) = &alloc.s_plus {
                v -= s[t][l];
            }
            if let Some(y) = &alloc.y_plus {
                v -= y[t][l].iter().sum::<f64>();
            }
            out[t][l] = v;
        }
    }
    out
}

/// Ordering and repositioning cost of an allocation.
pub fn purchase_cost(inst: &Instance, alloc: &Allocation) -> f64 {
    let mut c = 0.0;
    for row in &alloc.x {
        for (l, &v) in row.iter().enumerate() {
            c += inst.econ.purchase_cost[l] * v;
        }
    }
    if let (Some(r), Some(rc)) = (&alloc.x_repo, &inst.econ.reposition_cost) {
        for m in r {
            for (a, row) in m.iter().enumerate() {
                for (b, &v) in row.iter().enumerate() {
                    if a != b {
                        c += rc[a][b] * v;
                    }
                }
            }
        }
    }
    c
}

/// Stage-one part of the objective: optimistic sales revenue net of the
/// allied penalty, minus ordering cost.
pub fn stage_one_value(
    inst: &Instance,
    alloc: &Allocation,
    d_plus: Option<&DemandScenario>,
    cfg: &BioConfig,
) -> f64 {
    let e = &inst.econ;
    let mut v = -purchase_cost(inst, alloc);
    let (lb, lo) = (cfg.lambda_walkin(), cfg.lambda_online());
    if let Some(s) = &alloc.s_plus {
        for (t, row) in s.iter().enumerate() {
            for (l, &q) in row.iter().enumerate() {
                v += (e.walkin_price[t][l] + e.walkin_penalty[t][l]) * q;
            }
        }
    }
    if let Some(y) = &alloc.y_plus {
        for (t, m) in y.iter().enumerate() {
            for (l, row) in m.iter().enumerate() {
                for (z, &q) in row.iter().enumerate() {
                    v += (e.online_price[t] + e.online_penalty[t] - e.fulfill_cost[l][z]) * q;
                }
            }
        }
    }
    if let Some(d) = d_plus {
        for t in 0..inst.horizon {
            for l in 0..inst.num_nodes() {
                v -= e.walkin_penalty[t][l] * lb * d.walkin[t][l];
            }
            for z in 0..inst.num_zones() {
                v -= e.online_penalty[t] * lo * d.online[t][z];
            }
        }
    }
    v
}

#[cfg(test)]
mod tests;
