use proptest::prelude::*;

use super::*;
use crate::instance::{walkin_instance, ShipEdge};
use crate::solver::{solve, ObjectiveSense, Status};
use crate::uncertainty::{enumerate_discrete_points, ChannelBounds, UncertaintySet};

fn one_store_one_zone() -> Instance {
    let mut inst = walkin_instance(1, 100.0, 0.0, 0.0, 0.0);
    inst.network.zones = vec!["Z0".into()];
    inst.network.sfs_eligible = vec!["S0".into()];
    inst.network.ship_edges = vec![ShipEdge {
        node: "S0".into(),
        zone: "Z0".into(),
        days: 1,
    }];
    inst.econ.online_price = vec![100.0];
    inst.econ.fulfill_cost = vec![vec![10.0]];
    inst.inventory.pipeline = vec![vec![3.0]];
    inst
}

fn example_set(n: usize, hi: u32, budget: (u32, u32)) -> UncertaintySet {
    UncertaintySet {
        walkin: ChannelBounds::uniform(1, &vec![0; n], &vec![hi; n], budget),
        online: ChannelBounds::zero(1, 0),
    }
}

fn scen(walkin: &[f64]) -> DemandScenario {
    DemandScenario {
        walkin: vec![walkin.to_vec()],
        online: vec![vec![]],
    }
}

#[test]
fn fulfillment_matches_enumeration() {
    let inst = one_store_one_zone();
    let d = DemandScenario {
        walkin: vec![vec![2.0]],
        online: vec![vec![1.0]],
    };
    let mut best = f64::NEG_INFINITY;
    for s in 0..=2 {
        for y in 0..=1 {
            if s + y <= 3 {
                best = best.max(100.0 * s as f64 + 90.0 * y as f64);
            }
        }
    }
    let plan = evaluate_allocation(&inst, &Allocation::zeros(1, 1), &d).unwrap();
    assert!((plan.profit - best).abs() < 1e-9);
    assert!((plan.profit - 290.0).abs() < 1e-9);
    assert!((plan.walkin_sales[0][0] - 2.0).abs() < 1e-9);
    assert!((plan.fulfillment[0][0][0] - 1.0).abs() < 1e-9);
}

#[test]
fn pure_ro_allocation_profit() {
    let inst = walkin_instance(3, 0.0, 160.0, 0.0, 40.0);
    let a = Allocation::first_period(1, &[3.0, 3.0, 3.0]);
    let plan = evaluate_allocation(&inst, &a, &scen(&[3.0, 3.0, 0.0])).unwrap();
    assert!((plan.profit + 360.0).abs() < 1e-9);
    assert_eq!(plan.walkin_sales[0], vec![3.0, 3.0, 0.0]);
    let a = Allocation::first_period(1, &[2.0, 2.0, 2.0]);
    let plan = evaluate_allocation(&inst, &a, &scen(&[3.0, 3.0, 0.0])).unwrap();
    assert!((plan.profit + 560.0).abs() < 1e-9);
}

#[test]
fn mismatched_allocation_rejected() {
    let inst = walkin_instance(3, 0.0, 160.0, 0.0, 40.0);
    let a = Allocation::first_period(1, &[3.0, 3.0]);
    assert!(matches!(
        evaluate_allocation(&inst, &a, &scen(&[1.0, 1.0, 1.0])),
        Err(Error::Dimension(_))
    ));
}

fn solve_sp(
    inst: &Instance,
    set: &UncertaintySet,
    a: &Allocation,
    cfg: &BioConfig,
) -> (f64, DemandScenario) {
    let sp = build_subproblem(inst, set, a, cfg).unwrap();
    let sol = solve(&sp.model).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    (sol.objective, extract_worst_scenario(&sp, &sol).unwrap())
}

#[test]
fn single_location_subproblem() {
    let inst = walkin_instance(1, 0.0, 160.0, 0.0, 40.0);
    let set = example_set(1, 3, (0, 3));
    let a = Allocation::first_period(1, &[1.0]);
    let oracle = (0..=3)
        .map(|d| {
            evaluate_allocation(&inst, &a, &scen(&[d as f64]))
                .unwrap()
                .profit
                + 40.0
        })
        .fold(f64::INFINITY, f64::min);
    let (obj, worst) = solve_sp(&inst, &set, &a, &BioConfig::default());
    assert!((obj - oracle).abs() < 1e-9);
    assert!((obj + 320.0).abs() < 1e-9);
    assert_eq!(worst.walkin[0], vec![3.0]);
}

#[test]
fn empty_allocation_hits_budget_cap() {
    let inst = walkin_instance(3, 0.0, 160.0, 0.0, 40.0);
    let set = example_set(3, 3, (1, 6));
    let (obj, worst) = solve_sp(&inst, &set, &Allocation::zeros(1, 3), &BioConfig::default());
    assert!((obj + 960.0).abs() < 1e-9);
    assert_eq!(worst.walkin[0].iter().sum::<f64>(), 6.0);
}

#[test]
fn master_single_scenario() {
    let inst = walkin_instance(3, 0.0, 160.0, 0.0, 40.0);
    let set = example_set(3, 3, (1, 6));
    let mm = build_master(
        &inst,
        &set,
        &[scen(&[3.0, 3.0, 0.0])],
        &BioConfig::default(),
    )
    .unwrap();
    let sol = solve(&mm.model).unwrap();
    assert!((sol.objective + 240.0).abs() < 1e-9);
    let a = mm.allocation(&sol);
    assert_eq!(a.x[0], vec![3.0, 3.0, 0.0]);
}

#[test]
fn master_fully_optimistic() {
    let inst = walkin_instance(3, 160.0, 0.0, 0.0, 40.0);
    let set = example_set(3, 3, (1, 6));
    let mm = build_master(
        &inst,
        &set,
        &[set.lower_point()],
        &BioConfig::with_lambda(1.0),
    )
    .unwrap();
    let sol = solve(&mm.model).unwrap();
    assert!((sol.objective - 720.0).abs() < 1e-9);
    assert!((mm.allocation(&sol).total_units() - 6.0).abs() < 1e-9);
    assert!(mm.d_plus(&sol).is_some());
}

#[test]
fn empty_pool_has_no_eta() {
    let inst = walkin_instance(2, 10.0, 0.0, 0.0, 1.0);
    let set = example_set(2, 2, (0, 4));
    let mm = build_master(&inst, &set, &[], &BioConfig::default()).unwrap();
    assert!(mm.eta.is_none());
}

#[test]
fn repositioning_moves_stock_to_demand() {
    let mut inst = walkin_instance(2, 100.0, 0.0, 0.0, 50.0);
    inst.econ.reposition_cost = Some(vec![vec![0.0; 2]; 2]);
    inst.inventory.reposition_lead = Some(vec![vec![0; 2]; 2]);
    inst.inventory.pipeline = vec![vec![2.0], vec![0.0]];
    let set = UncertaintySet {
        walkin: ChannelBounds::uniform(1, &[0, 2], &[0, 2], (2, 2)),
        online: ChannelBounds::zero(1, 0),
    };
    let cfg = BioConfig {
        repositioning: true,
        ..BioConfig::default()
    };
    let mm = build_master(&inst, &set, &[set.lower_point()], &cfg).unwrap();
    let sol = solve(&mm.model).unwrap();
    let a = mm.allocation(&sol);
    assert!((sol.objective - 200.0).abs() < 1e-9);
    assert!((a.x_repo.as_ref().unwrap()[0][0][1] - 2.0).abs() < 1e-9);
    assert_eq!(a.total_units(), 0.0);
}

#[test]
fn repositioning_needs_parameters() {
    let inst = walkin_instance(2, 100.0, 0.0, 0.0, 50.0);
    let set = example_set(2, 2, (0, 4));
    let cfg = BioConfig {
        repositioning: true,
        ..BioConfig::default()
    };
    assert!(matches!(
        build_master(&inst, &set, &[], &cfg),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn basestock_critical_quantile() {
    let inst = walkin_instance(1, 100.0, 0.0, 0.0, 40.0);
    let means = scen(&[2.0]);
    assert!((critical_ratio(100.0, 40.0) - 0.6).abs() < 1e-12);
    let a = basestock_policy(&inst, &means).unwrap();
    assert_eq!(a.x[0], vec![2.0]);
}

#[test]
fn pwl_orders_mean_when_excess_unprofitable() {
    let inst = walkin_instance(2, 100.0, 0.0, 0.0, 60.0);
    let a = pwl_allocation(&inst, &scen(&[2.0, 3.0]), &scen(&[4.0, 6.0]), 0.5).unwrap();
    assert_eq!(a.x[0], vec![2.0, 3.0]);
    let inst = walkin_instance(2, 100.0, 0.0, 0.0, 40.0);
    let a = pwl_allocation(&inst, &scen(&[2.0, 3.0]), &scen(&[4.0, 6.0]), 0.5).unwrap();
    assert_eq!(a.x[0], vec![4.0, 6.0]);
}

/// Random one- or two-period instance with two stores and one zone served
/// by the first store.
fn small_network(
    periods: usize,
    price: f64,
    penalty: f64,
    holding: f64,
    ship: f64,
    stock: f64,
) -> Instance {
    let mut inst = walkin_instance(2, price, penalty, holding, 30.0);
    inst.horizon = periods;
    inst.network.zones = vec!["Z0".into()];
    inst.network.sfs_eligible = vec!["S0".into()];
    inst.network.ship_edges = vec![ShipEdge {
        node: "S0".into(),
        zone: "Z0".into(),
        days: 2,
    }];
    inst.econ.walkin_price = vec![vec![price; 2]; periods];
    inst.econ.walkin_penalty = vec![vec![penalty; 2]; periods];
    inst.econ.online_price = vec![price * 0.8; periods];
    inst.econ.online_penalty = vec![penalty * 0.5; periods];
    inst.econ.fulfill_cost = vec![vec![ship], vec![ship]];
    inst.inventory.pipeline = vec![vec![stock], vec![0.0]];
    inst
}

/// Primal recourse profit for a fixed allocation, optimistic part included.
fn primal_recourse(inst: &Instance, a: &Allocation, d: &DemandScenario, cfg: &BioConfig) -> f64 {
    let supply: Vec<Vec<LinExpr>> = supply_constants(inst, a)
        .into_iter()
        .map(|r| r.into_iter().map(LinExpr::constant).collect())
        .collect();
    let mut m = LinearModel::new(ObjectiveSense::Maximize);
    let b = add_recourse_block(
        &mut m,
        inst,
        d,
        cfg.lambda_walkin(),
        cfg.lambda_online(),
        &supply,
        "",
    );
    for &(v, c) in &b.objective.terms {
        m.add_objective_coeff(v, c);
    }
    m.objective_constant = b.objective.constant;
    let sol = solve(&m).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    sol.objective
}

fn all_points(set: &UncertaintySet, periods: usize) -> Vec<DemandScenario> {
    let mut out = vec![DemandScenario::zeros(0, 0, 0)];
    out[0].walkin = Vec::new();
    out[0].online = Vec::new();
    for t in 0..periods {
        let wk = enumerate_discrete_points(set, Channel::Walkin, t).unwrap();
        let on = enumerate_discrete_points(set, Channel::Online, t).unwrap();
        let mut next = Vec::new();
        for base in &out {
            for w in &wk {
                for o in &on {
                    let mut s = base.clone();
                    s.walkin.push(w.iter().map(|&v| f64::from(v)).collect());
                    s.online.push(o.iter().map(|&v| f64::from(v)).collect());
                    next.push(s);
                }
            }
        }
        out = next;
    }
    out
}

use crate::uncertainty::Channel;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn subproblem_is_exact(
        periods in 1usize..=2,
        price in 10.0f64..100.0,
        penalty in 0.0f64..80.0,
        holding in 0.0f64..5.0,
        ship in 0.0f64..5.0,
        stock in 0.0f64..3.0,
        x in proptest::collection::vec(0.0f64..3.0, 4),
        hi in proptest::collection::vec(0u32..3, 3),
        budget in 0u32..4,
        lambda in prop_oneof![Just(0.0), Just(0.5), 0.0f64..1.0],
        both in any::<bool>(),
    ) {
        let inst = small_network(periods, price, penalty, holding, ship, stock);
        let set = UncertaintySet {
            walkin: ChannelBounds::uniform(periods, &[0, 0], &[hi[0], hi[1]], (0, budget)),
            online: ChannelBounds::uniform(periods, &[0], &[hi[2]], (0, hi[2])),
        };
        let cfg = BioConfig {
            lambda,
            allied_channels: if both { AlliedChannels::Both } else { AlliedChannels::WalkinOnly },
            ..BioConfig::default()
        };
        let mut a = Allocation::zeros(periods, 2);
        for t in 0..periods {
            a.x[t] = vec![x[2 * t], x[2 * t + 1]];
        }
        // Optimistic sales from the first store only, within its stock.
        let mut sp_alloc = a.clone();
        let s0 = (stock + a.x[0][0]).min(lambda * f64::from(hi[0]));
        let mut s_plus = vec![vec![0.0; 2]; periods];
        s_plus[0][0] = s0;
        sp_alloc.s_plus = Some(s_plus);

        let oracle = all_points(&set, periods)
            .iter()
            .map(|d| primal_recourse(&inst, &sp_alloc, d, &cfg))
            .fold(f64::INFINITY, f64::min);
        let (obj, worst) = solve_sp(&inst, &set, &sp_alloc, &cfg);
        prop_assert!((obj - oracle).abs() < 1e-6 * (1.0 + oracle.abs()), "mip {obj} oracle {oracle}");
        let again = primal_recourse(&inst, &sp_alloc, &worst, &cfg);
        prop_assert!((again - obj).abs() < 1e-6 * (1.0 + obj.abs()));

        let dual = build_dual_recourse(&inst, &sp_alloc, &worst, &cfg).unwrap();
        let dsol = solve(&dual.model).unwrap();
        prop_assert!((dsol.objective - again).abs() < 1e-6 * (1.0 + again.abs()));
    }

    #[test]
    fn demand_response_is_optimal(
        hi in proptest::collection::vec(0u32..4, 3),
        lo_budget in 0u32..3,
        width in 0u32..6,
        alpha in proptest::collection::vec(0.0f64..200.0, 3),
    ) {
        let mut inst = walkin_instance(3, 50.0, 60.0, 0.0, 10.0);
        inst.econ.walkin_penalty = vec![vec![60.0, 100.0, 140.0]];
        let set = UncertaintySet {
            walkin: ChannelBounds::uniform(1, &[0; 3], &hi, (lo_budget.min(hi.iter().sum()), lo_budget + width)),
            online: ChannelBounds::zero(1, 0),
        };
        let duals = DualValues { alpha: vec![alpha.clone()], beta: vec![vec![]], gamma: vec![vec![0.0; 3]] };
        let d = demand_response(&inst, &set, &duals, &BioConfig::default());
        let cost = |v: &[f64]| -> f64 {
            v.iter().enumerate().map(|(k, &x)| (alpha[k] - inst.econ.walkin_penalty[0][k]) * x).sum()
        };
        let best = enumerate_discrete_points(&set, Channel::Walkin, 0)
            .unwrap()
            .iter()
            .map(|p| cost(&p.iter().map(|&v| f64::from(v)).collect::<Vec<_>>()))
            .fold(f64::INFINITY, f64::min);
        prop_assert!((cost(&d.walkin[0]) - best).abs() < 1e-9);
    }
}
