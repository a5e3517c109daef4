//! Seeded generators and brute-force oracles shared by integration tests.
#![allow(dead_code)]

use bimodal_inventory::formulations::{evaluate_allocation, Allocation};
use bimodal_inventory::instance::{validate_instance, walkin_instance, Instance, ShipEdge};
use bimodal_inventory::uncertainty::{
    enumerate_discrete_points, Channel, ChannelBounds, DemandScenario, UncertaintySet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_stores: usize,
    pub max_zones: usize,
    pub max_periods: usize,
    /// Largest box upper bound per cell.
    pub max_upper: u32,
    pub zero_inventory: bool,
}

fn money(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo..=hi) * 4.0).round() / 4.0
}

/// A valid random network with its own box-and-budget set.
pub fn small_instance(rng: &mut ChaCha8Rng, shape: Shape) -> (Instance, UncertaintySet) {
    loop {
        let n = rng.random_range(1..=shape.max_stores);
        let nz = rng.random_range(0..=shape.max_zones);
        let periods = rng.random_range(1..=shape.max_periods);
        let cost = money(rng, 5.0, 50.0);
        let mut inst = walkin_instance(n, 0.0, 0.0, 0.0, cost);
        inst.horizon = periods;
        let e = &mut inst.econ;
        let p0: Vec<f64> = (0..n).map(|_| money(rng, 0.0, 100.0)).collect();
        let b0: Vec<f64> = (0..n).map(|_| money(rng, 0.0, 100.0)).collect();
        e.walkin_price = (0..periods)
            .map(|t| p0.iter().map(|p| p * (1.0 - 0.1 * t as f64)).collect())
            .collect();
        e.walkin_penalty = vec![b0; periods];
        e.holding = (0..n).map(|_| money(rng, 0.0, 4.0)).collect();
        e.purchase_cost = (0..n).map(|_| money(rng, 5.0, 50.0)).collect();
        let po = money(rng, 0.0, 80.0);
        let bo = money(rng, 0.0, 40.0);
        e.online_price = vec![po; periods];
        e.online_penalty = vec![bo; periods];
        e.fulfill_cost = (0..n)
            .map(|_| (0..nz).map(|_| money(rng, 1.0, 12.0)).collect())
            .collect();

        let net = &mut inst.network;
        net.zones = (0..nz).map(|z| format!("Z{z}")).collect();
        for l in 0..n {
            for z in 0..nz {
                if rng.random_bool(0.7) {
                    net.ship_edges.push(ShipEdge {
                        node: format!("S{l}"),
                        zone: format!("Z{z}"),
                        days: rng.random_range(1..=3),
                    });
                }
            }
        }
        let mut eligible: Vec<String> = net.ship_edges.iter().map(|s| s.node.clone()).collect();
        eligible.dedup();
        net.sfs_eligible = eligible;

        let lead: Vec<usize> = (0..n)
            .map(|_| {
                if periods > 1 {
                    rng.random_range(0..=1)
                } else {
                    0
                }
            })
            .collect();
        inst.inventory.pipeline = lead
            .iter()
            .map(|&lt| {
                (0..=lt)
                    .map(|_| {
                        if shape.zero_inventory {
                            0.0
                        } else {
                            f64::from(rng.random_range(0..=2u32))
                        }
                    })
                    .collect()
            })
            .collect();
        inst.inventory.lead_time = lead;
        if !validate_instance(&inst).is_empty() {
            continue;
        }

        let mut side = |width: usize| -> ChannelBounds {
            let mut b = ChannelBounds::zero(periods, width);
            for t in 0..periods {
                for k in 0..width {
                    let lo = rng.random_range(0..=1u32);
                    b.lower[t][k] = lo;
                    b.upper[t][k] = rng.random_range(lo..=shape.max_upper.max(lo));
                }
                let (sl, su): (u32, u32) = (b.lower[t].iter().sum(), b.upper[t].iter().sum());
                let x = rng.random_range(sl..=su);
                let y = rng.random_range(sl..=su);
                b.budget_lower[t] = x.min(y);
                b.budget_upper[t] = x.max(y);
            }
            b
        };
        let set = UncertaintySet {
            walkin: side(n),
            online: side(nz),
        };
        return (inst, set);
    }
}

/// Every integer demand point of the set, as scenarios.
pub fn all_points(set: &UncertaintySet) -> Vec<DemandScenario> {
    let periods = set.walkin.periods();
    let mut out = vec![DemandScenario::zeros(
        periods,
        set.walkin.width(),
        set.online.width(),
    )];
    for c in [Channel::Walkin, Channel::Online] {
        for t in 0..periods {
            let pts = enumerate_discrete_points(set, c, t).unwrap();
            out = out
                .iter()
                .flat_map(|s| {
                    pts.iter().map(move |p| {
                        let mut s = s.clone();
                        s.channel_mut(c)[t] = p.iter().map(|&v| f64::from(v)).collect();
                        s
                    })
                })
                .collect();
        }
    }
    out
}

pub fn point_count(set: &UncertaintySet) -> usize {
    let periods = set.walkin.periods();
    let mut n = 1usize;
    for c in [Channel::Walkin, Channel::Online] {
        for t in 0..periods {
            n = n.saturating_mul(enumerate_discrete_points(set, c, t).unwrap().len());
        }
    }
    n
}

/// Worst realized profit of fixed orders over the given points.
pub fn brute_worst(inst: &Instance, alloc: &Allocation, points: &[DemandScenario]) -> f64 {
    points
        .iter()
        .map(|d| evaluate_allocation(inst, alloc, d).unwrap().profit)
        .fold(f64::INFINITY, f64::min)
}

/// Every integer order grid with entries in `0..=cap`.
pub fn integer_orders(periods: usize, nodes: usize, cap: u32) -> Vec<Allocation> {
    let cells = periods * nodes;
    let mut out = Vec::new();
    let mut cur = vec![0u32; cells];
    loop {
        let mut a = Allocation::zeros(periods, nodes);
        for t in 0..periods {
            for l in 0..nodes {
                a.x[t][l] = f64::from(cur[t * nodes + l]);
            }
        }
        out.push(a);
        let mut k = 0;
        while k < cells && cur[k] == cap {
            cur[k] = 0;
            k += 1;
        }
        if k == cells {
            return out;
        }
        cur[k] += 1;
    }
}

pub fn three_store_example(p: f64, b: f64) -> (Instance, UncertaintySet) {
    let inst = walkin_instance(3, p, b, 0.0, 40.0);
    let set = UncertaintySet {
        walkin: ChannelBounds::uniform(1, &[0; 3], &[3; 3], (1, 6)),
        online: ChannelBounds::zero(1, 0),
    };
    (inst, set)
}
