//! Seeded synthetic networks for experiments and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{BusinessRules, EconParams, Instance, InventoryState, Network, ShipEdge};
use crate::uncertainty::{DemandScenario, MeanDemand};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticParams {
    pub stores: usize,
    pub dcs: usize,
    pub zones: usize,
    /// Planning periods (weeks).
    pub horizon: usize,
    pub walkin_mean: (f64, f64),
    pub online_mean: (f64, f64),
    pub price: (f64, f64),
    /// Purchase cost as a fraction of price.
    pub cost_fraction: (f64, f64),
    /// Lost-sale penalty as a fraction of price.
    pub penalty_fraction: f64,
    /// Weekly holding cost as a fraction of price.
    pub holding_fraction: f64,
    pub store_ship_cost: (f64, f64),
    pub dc_ship_cost: (f64, f64),
    pub lead_time: (usize, usize),
    /// Initial on-hand per node as a multiple of its weekly walk-in mean.
    pub initial_cover: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            stores: 5,
            dcs: 2,
            zones: 3,
            horizon: 2,
            walkin_mean: (1.0, 4.0),
            online_mean: (2.0, 5.0),
            price: (40.0, 120.0),
            cost_fraction: (0.35, 0.6),
            penalty_fraction: 1.0,
            holding_fraction: 0.005,
            store_ship_cost: (4.0, 9.0),
            dc_ship_cost: (2.0, 6.0),
            lead_time: (0, 1),
            initial_cover: 0.0,
        }
    }
}

/// An instance plus the weekly Poisson means that drive it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticInstance {
    pub instance: Instance,
    /// One period of weekly means.
    pub weekly_means: MeanDemand,
}

fn draw(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    let v = if range.1 > range.0 {
        rng.random_range(range.0..=range.1)
    } else {
        range.0
    };
    (v * 100.0).round() / 100.0
}

/// Stores `S0..`, warehouses `W0..` and zones `Z0..`. Every node ships to
/// every zone; warehouses have no walk-in demand.
pub fn generate_synthetic(params: &SyntheticParams, seed: u64) -> Result<SyntheticInstance> {
    if params.stores + params.dcs == 0 || params.horizon == 0 {
        return Err(Error::InvalidArgument(
            "need at least one node and one period".into(),
        ));
    }
    if params.lead_time.0 > params.lead_time.1 {
        return Err(Error::InvalidArgument("lead time range is reversed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stores: Vec<String> = (0..params.stores).map(|i| format!("S{i}")).collect();
    let dcs: Vec<String> = (0..params.dcs).map(|i| format!("W{i}")).collect();
    let zones: Vec<String> = (0..params.zones).map(|i| format!("Z{i}")).collect();
    let nodes: Vec<String> = stores.iter().chain(&dcs).cloned().collect();
    let n = nodes.len();
    let t = params.horizon;

    let price = draw(&mut rng, params.price);
    let cost = (price * draw(&mut rng, params.cost_fraction) * 100.0).round() / 100.0;
    let penalty = price * params.penalty_fraction;
    let mut fulfill_cost = vec![vec![0.0; params.zones]; n];
    let mut ship_edges = Vec::new();
    for (l, node) in nodes.iter().enumerate() {
        let is_dc = l >= params.stores;
        for (z, zone) in zones.iter().enumerate() {
            fulfill_cost[l][z] = draw(
                &mut rng,
                if is_dc {
                    params.dc_ship_cost
                } else {
                    params.store_ship_cost
                },
            );
            let days = if is_dc {
                rng.random_range(2..=5)
            } else {
                rng.random_range(1..=3)
            };
            ship_edges.push(ShipEdge {
                node: node.clone(),
                zone: zone.clone(),
                days,
            });
        }
    }
    let walkin_means: Vec<f64> = (0..n)
        .map(|l| {
            if l < params.stores {
                draw(&mut rng, params.walkin_mean)
            } else {
                0.0
            }
        })
        .collect();
    let online_means: Vec<f64> = (0..params.zones)
        .map(|_| draw(&mut rng, params.online_mean))
        .collect();
    let lead_time: Vec<usize> = (0..n)
        .map(|_| rng.random_range(params.lead_time.0..=params.lead_time.1))
        .collect();
    let pipeline: Vec<Vec<f64>> = (0..n)
        .map(|l| {
            let mut p = vec![0.0; lead_time[l] + 1];
            p[0] = (params.initial_cover * walkin_means[l]).round();
            p
        })
        .collect();

    let instance = Instance {
        network: Network {
            nodes: nodes.clone(),
            warehouses: dcs,
            zones,
            supplier: "SUP".into(),
            sfs_eligible: nodes,
            ship_edges,
        },
        econ: EconParams {
            walkin_price: vec![vec![price; n]; t],
            walkin_penalty: vec![vec![penalty; n]; t],
            online_price: vec![price; t],
            online_penalty: vec![penalty; t],
            holding: vec![price * params.holding_fraction; n],
            fulfill_cost,
            purchase_cost: vec![cost; n],
            reposition_cost: None,
        },
        inventory: InventoryState {
            pipeline,
            lead_time,
            reposition_lead: None,
        },
        horizon: t,
        business_rules: BusinessRules::default(),
    };
    Ok(SyntheticInstance {
        instance,
        weekly_means: DemandScenario {
            walkin: vec![walkin_means],
            online: vec![online_means],
        },
    })
}
