//! Policy evaluation: batch Monte-Carlo profit statistics and a rolling
//! weekly simulation with order-level fulfillment.

use std::collections::VecDeque;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ccg::{solve_two_stage, CcgOptions, SubproblemMode};
use crate::error::{Error, Result};
use crate::formulations::{
    basestock_policy, critical_ratio, pwl_allocation, Allocation, BioConfig,
};
use crate::instance::Instance;
use crate::tuning::scenario_profits;
use crate::uncertainty::{
    poisson_quantile, quantile_bounds_from_means, DemandScenario, MeanDemand,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitStats {
    pub count: usize,
    pub min: f64,
    pub p05: f64,
    pub p10: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
    pub std_error: f64,
}

/// Lower empirical quantile of sorted values: `v[ceil(q n) - 1]`.
pub fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let k = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

pub fn profit_stats(profits: &[f64]) -> Result<ProfitStats> {
    if profits.is_empty() {
        return Err(Error::InvalidArgument("no profits to summarize".into()));
    }
    let mut v = profits.to_vec();
    v.sort_by(f64::total_cmp);
    let (mean, se) = mean_and_se(&v);
    Ok(ProfitStats {
        count: v.len(),
        min: v[0],
        p05: lower_quantile(&v, 0.05),
        p10: lower_quantile(&v, 0.10),
        median: lower_quantile(&v, 0.5),
        mean,
        max: v[v.len() - 1],
        std_error: se,
    })
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Profit distribution of a fixed allocation over a scenario sample.
pub fn batch_evaluate(
    inst: &Instance,
    alloc: &Allocation,
    scenarios: &[DemandScenario],
) -> Result<ProfitStats> {
    profit_stats(&scenario_profits(inst, alloc, scenarios)?)
}

/// Split each location's weekly units over `days` with equal day
/// probabilities. Returns, per day, the location index of every single-unit
/// order in arrival order.
pub fn spread_down(weekly: &[u32], days: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    spread_with(weekly, days, &mut rng)
}

fn spread_with(weekly: &[u32], days: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    if days == 0 {
        return Err(Error::InvalidArgument("days must be at least 1".into()));
    }
    let mut out = vec![Vec::new(); days];
    for (loc, &units) in weekly.iter().enumerate() {
        for _ in 0..units {
            out[rng.random_range(0..days)].push(loc);
        }
    }
    for day in &mut out {
        day.shuffle(rng);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "snake_case")]
pub enum Order {
    Walkin { node: usize },
    Online { zone: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Sold { node: usize },
    Shipped { node: usize, cost: f64 },
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FulfillmentEvent {
    pub order: Order,
    pub outcome: Outcome,
}

/// Serve orders in sequence. Walk-in orders take local stock. Online orders
/// ship from the cheapest node among those holding more than their reserve,
/// falling back to the cheapest node with any stock.
pub fn fulfill_order_stream(
    inst: &Instance,
    orders: &[Order],
    on_hand: &mut [f64],
    reserve: &[f64],
) -> Vec<FulfillmentEvent> {
    let edges = inst.fulfillment_edges();
    orders
        .iter()
        .map(|&order| {
            let outcome = match order {
                Order::Walkin { node } => {
                    if on_hand[node] >= 1.0 {
                        on_hand[node] -= 1.0;
                        Outcome::Sold { node }
                    } else {
                        Outcome::Lost
                    }
                }
                Order::Online { zone } => {
                    let pick = |tier_one: bool| {
                        edges
                            .iter()
                            .filter(|e| e.1 == zone && on_hand[e.0] >= 1.0)
                            .filter(|e| !tier_one || on_hand[e.0] > reserve[e.0])
                            .map(|e| (e.0, inst.econ.fulfill_cost[e.0][zone]))
                            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                    };
                    match pick(true).or_else(|| pick(false)) {
                        Some((node, cost)) => {
                            on_hand[node] -= 1.0;
                            Outcome::Shipped { node, cost }
                        }
                        None => Outcome::Lost,
                    }
                }
            };
            FulfillmentEvent { order, outcome }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    Basestock,
    Pwl {
        discount: f64,
    },
    Bio {
        lambda: f64,
        #[serde(default)]
        integer: bool,
        /// Defaults to [`rolling_ccg_options`].
        #[serde(default)]
        options: Option<CcgOptions>,
    },
}

/// Solver settings for weekly re-solves: heuristic subproblems only, so
/// every replication is fast and reproducible.
pub fn rolling_ccg_options() -> CcgOptions {
    CcgOptions {
        subproblem_mode: SubproblemMode::AlternatingHeuristic,
        ..CcgOptions::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Planning look-ahead in weeks.
    pub horizon: usize,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self { kind, horizon: 2 }
    }

    pub fn bio(lambda: f64) -> Self {
        Self::new(PolicyKind::Bio {
            lambda,
            integer: false,
            options: None,
        })
    }

    pub fn name(&self) -> String {
        match &self.kind {
            PolicyKind::Basestock => "basestock".into(),
            PolicyKind::Pwl { .. } => "pwl".into(),
            PolicyKind::Bio { lambda, .. } if *lambda == 0.0 => "pure_ro".into(),
            PolicyKind::Bio { lambda, .. } => format!("bio_{}", (lambda * 100.0).round()),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::InvalidArgument(
                "policy horizon must be at least 1".into(),
            ));
        }
        match &self.kind {
            PolicyKind::Bio { lambda, .. } if !(0.0..=1.0).contains(lambda) => Err(
                Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")),
            ),
            PolicyKind::Pwl { discount } if !(0.0..=1.0).contains(discount) => Err(
                Error::InvalidArgument(format!("discount {discount} outside [0, 1]")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub weeks: usize,
    pub replications: usize,
    pub seed: u64,
    pub days_per_week: usize,
    /// Credit stock left at the end at purchase cost in realized profit.
    pub credit_excess: bool,
    /// Poisson quantiles used for the uncertainty set of robust policies.
    pub set_quantiles: (f64, f64),
    /// Keep per-day node records.
    pub record_trace: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            weeks: 3,
            replications: 30,
            seed: 0,
            days_per_week: 7,
            credit_excess: false,
            set_quantiles: (0.05, 0.95),
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KpiReport {
    pub replenish_qty: f64,
    pub dc_replenish_qty: f64,
    pub walkin_sales_qty: f64,
    pub total_sales_qty: f64,
    pub sfs_qty: f64,
    pub satisfied_revenue: f64,
    pub missed_revenue: f64,
    pub shipping_cost: f64,
    pub purchase_cost: f64,
    pub excess_inventory_at_cost: f64,
    pub walkin_service_level: f64,
    pub ecom_service_level: f64,
    pub total_service_level: f64,
    pub inventory_turnover: f64,
    pub penalized_profit: f64,
    pub realized_profit: f64,
}

impl KpiReport {
    pub const FIELDS: [&'static str; 16] = [
        "replenish_qty",
        "dc_replenish_qty",
        "walkin_sales_qty",
        "total_sales_qty",
        "sfs_qty",
        "satisfied_revenue",
        "missed_revenue",
        "shipping_cost",
        "purchase_cost",
        "excess_inventory_at_cost",
        "walkin_service_level",
        "ecom_service_level",
        "total_service_level",
        "inventory_turnover",
        "penalized_profit",
        "realized_profit",
    ];

    pub fn values(&self) -> [f64; 16] {
        [
            self.replenish_qty,
            self.dc_replenish_qty,
            self.walkin_sales_qty,
            self.total_sales_qty,
            self.sfs_qty,
            self.satisfied_revenue,
            self.missed_revenue,
            self.shipping_cost,
            self.purchase_cost,
            self.excess_inventory_at_cost,
            self.walkin_service_level,
            self.ecom_service_level,
            self.total_service_level,
            self.inventory_turnover,
            self.penalized_profit,
            self.realized_profit,
        ]
    }

    fn from_values(v: [f64; 16]) -> Self {
        Self {
            replenish_qty: v[0],
            dc_replenish_qty: v[1],
            walkin_sales_qty: v[2],
            total_sales_qty: v[3],
            sfs_qty: v[4],
            satisfied_revenue: v[5],
            missed_revenue: v[6],
            shipping_cost: v[7],
            purchase_cost: v[8],
            excess_inventory_at_cost: v[9],
            walkin_service_level: v[10],
            ecom_service_level: v[11],
            total_service_level: v[12],
            inventory_turnover: v[13],
            penalized_profit: v[14],
            realized_profit: v[15],
        }
    }
}

/// Stock movements at one node on one day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub week: usize,
    pub day: usize,
    pub node: usize,
    pub start: f64,
    pub arrivals: f64,
    pub walkin_sales: f64,
    pub shipments: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub replication: usize,
    pub kpi: KpiReport,
    /// Units lost per channel, for the penalty identity.
    pub lost_walkin: f64,
    pub lost_online: f64,
    pub penalty: f64,
    /// Orders placed per week and node.
    pub orders: Vec<Vec<f64>>,
    pub failures: Vec<String>,
    pub trace: Vec<DayRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub policy: String,
    pub spec: PolicySpec,
    pub config: SimulationConfig,
    pub replications: Vec<ReplicationResult>,
    pub mean: KpiReport,
    pub std_error: KpiReport,
}

/// Copy of `inst` with `periods` periods; per-period data past the end of
/// the original is repeated from its last period.
pub fn with_horizon(inst: &Instance, periods: usize) -> Instance {
    fn fit<T: Clone>(v: &[T], n: usize) -> Vec<T> {
        (0..n).map(|t| v[t.min(v.len() - 1)].clone()).collect()
    }
    let mut out = inst.clone();
    out.horizon = periods;
    out.econ.walkin_price = fit(&inst.econ.walkin_price, periods);
    out.econ.walkin_penalty = fit(&inst.econ.walkin_penalty, periods);
    out.econ.online_price = fit(&inst.econ.online_price, periods);
    out.econ.online_penalty = fit(&inst.econ.online_penalty, periods);
    if let Some(c) = &inst.business_rules.transport_capacity {
        out.business_rules.transport_capacity = Some(fit(c, periods));
    }
    if let Some(c) = &inst.business_rules.fulfillment_capacity {
        out.business_rules.fulfillment_capacity = Some(fit(c, periods));
    }
    out
}

pub fn repeat_means(weekly: &MeanDemand, periods: usize) -> MeanDemand {
    DemandScenario {
        walkin: vec![weekly.walkin[0].clone(); periods],
        online: vec![weekly.online[0].clone(); periods],
    }
}

/// Orders for the current week under a policy, rounded to whole units.
fn plan_orders(
    plan: &Instance,
    means: &MeanDemand,
    spec: &PolicySpec,
    cfg: &SimulationConfig,
) -> Result<Vec<f64>> {
    let alloc = match &spec.kind {
        PolicyKind::Basestock => basestock_policy(plan, means)?,
        PolicyKind::Pwl { discount } => {
            let e = &plan.econ;
            let avg_cost =
                e.purchase_cost.iter().sum::<f64>() / e.purchase_cost.len().max(1) as f64;
            let edges = plan.fulfillment_edges();
            let avg_ship = if edges.is_empty() {
                0.0
            } else {
                edges
                    .iter()
                    .map(|&(l, z, _)| e.fulfill_cost[l][z])
                    .sum::<f64>()
                    / edges.len() as f64
            };
            let mut q = means.clone();
            for t in 0..plan.horizon {
                for (l, v) in q.walkin[t].iter_mut().enumerate() {
                    let cr = critical_ratio(e.walkin_price[t][l], e.purchase_cost[l]);
                    *v = f64::from(poisson_quantile(*v, cr)).max(*v);
                }
                let cr = critical_ratio(e.online_price[t], avg_cost + avg_ship);
                for v in q.online[t].iter_mut() {
                    *v = f64::from(poisson_quantile(*v, cr)).max(*v);
                }
            }
            pwl_allocation(plan, means, &q, *discount)?
        }
        PolicyKind::Bio {
            lambda,
            integer,
            options,
        } => {
            let set = quantile_bounds_from_means(means, cfg.set_quantiles.0, cfg.set_quantiles.1)?;
            let bio = BioConfig {
                integer_allocations: *integer,
                ..BioConfig::with_lambda(*lambda)
            };
            solve_two_stage(
                plan,
                &set,
                &bio,
                &options.unwrap_or_else(rolling_ccg_options),
            )?
            .allocation
        }
    };
    Ok(alloc.x[0].iter().map(|v| v.round().max(0.0)).collect())
}

fn replication_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0.0, |d| d.sample(rng)) as u32
}

fn run_replication(
    inst: &Instance,
    weekly: &MeanDemand,
    spec: &PolicySpec,
    cfg: &SimulationConfig,
    rep: usize,
) -> ReplicationResult {
    let n = inst.num_nodes();
    let nz = inst.num_zones();
    let e = &inst.econ;
    let days = cfg.days_per_week;
    let mut rng = replication_rng(cfg.seed, rep);
    let mut on_hand: Vec<f64> = (0..n).map(|l| inst.initial_on_hand(l)).collect();
    let mut queue: Vec<VecDeque<f64>> = (0..n)
        .map(|l| {
            (0..inst.lead_time(l))
                .map(|j| {
                    inst.inventory.pipeline[l]
                        .get(j + 1)
                        .copied()
                        .unwrap_or(0.0)
                })
                .collect()
        })
        .collect();
    let mut k = KpiReport::default();
    let (mut demand_walkin, mut demand_online) = (0.0, 0.0);
    let (mut lost_walkin, mut lost_online, mut penalty) = (0.0, 0.0, 0.0);
    let mut on_hand_days = 0.0;
    let mut orders_log = Vec::with_capacity(cfg.weeks);
    let mut failures = Vec::new();
    let mut trace = Vec::new();
    let plan_base = with_horizon(inst, spec.horizon);
    let plan_means = repeat_means(weekly, spec.horizon);

    for week in 0..cfg.weeks {
        let mut plan = plan_base.clone();
        for l in 0..n {
            let mut p = vec![on_hand[l]];
            p.extend(queue[l].iter().copied());
            plan.inventory.pipeline[l] = p;
        }
        let orders = match plan_orders(&plan, &plan_means, spec, cfg) {
            Ok(o) => o,
            Err(err) => {
                failures.push(format!("week {week}: {err}"));
                vec![0.0; n]
            }
        };
        let mut arrivals = vec![0.0; n];
        for l in 0..n {
            k.replenish_qty += orders[l];
            if inst.is_warehouse(l) {
                k.dc_replenish_qty += orders[l];
            }
            k.purchase_cost += e.purchase_cost[l] * orders[l];
            queue[l].push_back(orders[l]);
            arrivals[l] = queue[l].pop_front().unwrap_or(0.0);
        }
        orders_log.push(orders);

        let walkin: Vec<u32> = (0..n)
            .map(|l| poisson(&mut rng, weekly.walkin[0][l]))
            .collect();
        let online: Vec<u32> = (0..nz)
            .map(|z| poisson(&mut rng, weekly.online[0][z]))
            .collect();
        let walkin_days = spread_with(&walkin, days, &mut rng).expect("days checked");
        let online_days = spread_with(&online, days, &mut rng).expect("days checked");

        for day in 0..days {
            let mut stream: Vec<Order> = walkin_days[day]
                .iter()
                .map(|&node| Order::Walkin { node })
                .chain(online_days[day].iter().map(|&zone| Order::Online { zone }))
                .collect();
            stream.shuffle(&mut rng);
            let start = on_hand.clone();
            let todays_arrivals = if day == 0 {
                arrivals.clone()
            } else {
                vec![0.0; n]
            };
            for l in 0..n {
                on_hand[l] += todays_arrivals[l];
            }
            let remaining = (days - day) as f64;
            let reserve: Vec<f64> = (0..n)
                .map(|l| weekly.walkin[0][l] / days as f64 * remaining)
                .collect();
            let events = fulfill_order_stream(inst, &stream, &mut on_hand, &reserve);
            let mut sold = vec![0.0; n];
            let mut shipped = vec![0.0; n];
            for ev in &events {
                match (ev.order, ev.outcome) {
                    (Order::Walkin { node }, Outcome::Sold { .. }) => {
                        demand_walkin += 1.0;
                        sold[node] += 1.0;
                        k.walkin_sales_qty += 1.0;
                        k.satisfied_revenue += e.walkin_price[0][node];
                    }
                    (Order::Walkin { node }, _) => {
                        demand_walkin += 1.0;
                        lost_walkin += 1.0;
                        k.missed_revenue += e.walkin_price[0][node];
                        penalty += e.walkin_penalty[0][node];
                    }
                    (Order::Online { .. }, Outcome::Shipped { node, cost }) => {
                        demand_online += 1.0;
                        shipped[node] += 1.0;
                        if !inst.is_warehouse(node) {
                            k.sfs_qty += 1.0;
                        }
                        k.satisfied_revenue += e.online_price[0];
                        k.shipping_cost += cost;
                    }
                    (Order::Online { .. }, _) => {
                        demand_online += 1.0;
                        lost_online += 1.0;
                        k.missed_revenue += e.online_price[0];
                        penalty += e.online_penalty[0];
                    }
                }
            }
            on_hand_days += on_hand.iter().sum::<f64>();
            if cfg.record_trace {
                for l in 0..n {
                    trace.push(DayRecord {
                        week,
                        day,
                        node: l,
                        start: start[l],
                        arrivals: todays_arrivals[l],
                        walkin_sales: sold[l],
                        shipments: shipped[l],
                        end: on_hand[l],
                    });
                }
            }
        }
    }

    k.total_sales_qty = k.walkin_sales_qty + (demand_online - lost_online);
    k.excess_inventory_at_cost = (0..n)
        .map(|l| e.purchase_cost[l] * (on_hand[l] + queue[l].iter().sum::<f64>()))
        .sum();
    let level = |served: f64, demand: f64| if demand > 0.0 { served / demand } else { 1.0 };
    k.walkin_service_level = level(k.walkin_sales_qty, demand_walkin);
    k.ecom_service_level = level(demand_online - lost_online, demand_online);
    k.total_service_level = level(k.total_sales_qty, demand_walkin + demand_online);
    let avg_on_hand = on_hand_days / (cfg.weeks * days).max(1) as f64;
    k.inventory_turnover = if avg_on_hand > 0.0 {
        k.total_sales_qty / avg_on_hand
    } else {
        0.0
    };
    k.realized_profit = k.satisfied_revenue - k.shipping_cost - k.purchase_cost
        + if cfg.credit_excess {
            k.excess_inventory_at_cost
        } else {
            0.0
        };
    k.penalized_profit = k.realized_profit - penalty;

    ReplicationResult {
        replication: rep,
        kpi: k,
        lost_walkin,
        lost_online,
        penalty,
        orders: orders_log,
        failures,
        trace,
    }
}

/// Weekly rolling-horizon simulation of one policy. Each week the policy is
/// re-solved on the current stock and pipeline, only the first week's
/// orders are placed, and that week's demand is played out day by day.
pub fn run_rolling_horizon(
    inst: &Instance,
    weekly_means: &MeanDemand,
    spec: &PolicySpec,
    cfg: &SimulationConfig,
) -> Result<SimulationResult> {
    inst.check_structure()?;
    spec.check()?;
    if cfg.replications < 1 || cfg.days_per_week < 1 {
        return Err(Error::InvalidArgument(
            "replications and days per week must be at least 1".into(),
        ));
    }
    let max_lead = inst.inventory.lead_time.iter().copied().max().unwrap_or(0);
    if cfg.weeks < max_lead + 1 {
        return Err(Error::InvalidArgument(format!(
            "{} weeks cannot cover a lead time of {max_lead}",
            cfg.weeks
        )));
    }
    if weekly_means.walkin.is_empty()
        || weekly_means.online.is_empty()
        || weekly_means.walkin[0].len() != inst.num_nodes()
        || weekly_means.online[0].len() != inst.num_zones()
    {
        return Err(Error::Dimension(
            "weekly means do not match the instance".into(),
        ));
    }
    let replications: Vec<ReplicationResult> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(inst, weekly_means, spec, cfg, rep))
        .collect();
    let mut mean = [0.0; 16];
    let mut se = [0.0; 16];
    for i in 0..16 {
        let col: Vec<f64> = replications.iter().map(|r| r.kpi.values()[i]).collect();
        let (m, s) = mean_and_se(&col);
        mean[i] = m;
        se[i] = s;
    }
    Ok(SimulationResult {
        policy: spec.name(),
        spec: spec.clone(),
        config: *cfg,
        replications,
        mean: KpiReport::from_values(mean),
        std_error: KpiReport::from_values(se),
    })
}

/// One row per policy and replication plus `mean` and `std_error` rows.
pub fn write_kpi_ledger(path: impl AsRef<Path>, results: &[SimulationResult]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["policy", "row"];
    header.extend(KpiReport::FIELDS);
    w.write_record(&header)?;
    for r in results {
        let rows = r
            .replications
            .iter()
            .map(|rep| (rep.replication.to_string(), rep.kpi))
            .chain([
                ("mean".to_string(), r.mean),
                ("std_error".to_string(), r.std_error),
            ]);
        for (label, kpi) in rows {
            let mut rec = vec![r.policy.clone(), label];
            rec.extend(kpi.values().iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}
