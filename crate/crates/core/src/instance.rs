//! Network, economics, lead times and initial inventory of a single-SKU
//! omnichannel instance.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShipEdge {
    pub node: String,
    pub zone: String,
    /// Delivery time label in days.
    pub days: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub nodes: Vec<String>,
    /// Nodes that are distribution centers rather than stores.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warehouses: Vec<String>,
    pub zones: Vec<String>,
    pub supplier: String,
    pub sfs_eligible: Vec<String>,
    pub ship_edges: Vec<ShipEdge>,
}

/// Per-period arrays are indexed `[t][l]`, fulfillment costs `[l][z]` and
/// repositioning costs `[from][to]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconParams {
    pub walkin_price: Vec<Vec<f64>>,
    pub walkin_penalty: Vec<Vec<f64>>,
    pub online_price: Vec<f64>,
    pub online_penalty: Vec<f64>,
    pub holding: Vec<f64>,
    pub fulfill_cost: Vec<Vec<f64>>,
    pub purchase_cost: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reposition_cost: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InventoryState {
    /// `pipeline[l][j]`: units reaching node `l` in `j` periods; `j = 0` is
    /// on hand. Length `lead_time[l] + 1`.
    pub pipeline: Vec<Vec<f64>>,
    pub lead_time: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reposition_lead: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceWindow {
    /// Minimum share of online fulfillment shipped over fast edges.
    pub target_fraction: f64,
    /// Edges with `days <= max_days` count as fast.
    pub max_days: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusinessRules {
    /// Upper bound on `x[t][l]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport_capacity: Option<Vec<Vec<f64>>>,
    /// Upper bound on `sum_z y[t][l][z]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fulfillment_capacity: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_window: Option<ServiceWindow>,
}

impl BusinessRules {
    pub fn is_empty(&self) -> bool {
        self.transport_capacity.is_none()
            && self.fulfillment_capacity.is_none()
            && self.service_window.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub network: Network,
    pub econ: EconParams,
    pub inventory: InventoryState,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "BusinessRules::is_empty")]
    pub business_rules: BusinessRules,
}

/// A failed invariant found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub indices: Vec<usize>,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {:?}: {}", self.rule, self.indices, self.message)
    }
}

impl Instance {
    pub fn num_nodes(&self) -> usize {
        self.network.nodes.len()
    }

    pub fn num_zones(&self) -> usize {
        self.network.zones.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.network.nodes.iter().position(|n| n == name)
    }

    pub fn zone_index(&self, name: &str) -> Option<usize> {
        self.network.zones.iter().position(|z| z == name)
    }

    pub fn is_warehouse(&self, l: usize) -> bool {
        self.network
            .warehouses
            .iter()
            .any(|w| *w == self.network.nodes[l])
    }

    /// `(node, zone, days)` for every edge that may carry online fulfillment:
    /// the edge exists and its node is ship-from eligible. Sorted by node,
    /// then zone.
    pub fn fulfillment_edges(&self) -> Vec<(usize, usize, u32)> {
        let mut out = Vec::new();
        for e in &self.network.ship_edges {
            if !self.network.sfs_eligible.contains(&e.node) {
                continue;
            }
            if let (Some(l), Some(z)) = (self.node_index(&e.node), self.zone_index(&e.zone)) {
                if !out.iter().any(|&(a, b, _)| a == l && b == z) {
                    out.push((l, z, e.days));
                }
            }
        }
        out.sort();
        out
    }

    pub fn lead_time(&self, l: usize) -> usize {
        self.inventory.lead_time[l]
    }

    pub fn initial_on_hand(&self, l: usize) -> f64 {
        self.inventory.pipeline[l].first().copied().unwrap_or(0.0)
    }

    /// Pipeline units arriving at node `l` during period `t` (that is
    /// `pipeline[l][t + 1]` while `t < L`).
    pub fn pipeline_arrival(&self, l: usize, t: usize) -> f64 {
        if t < self.lead_time(l) {
            self.inventory.pipeline[l]
                .get(t + 1)
                .copied()
                .unwrap_or(0.0)
        } else {
            0.0
        }
    }

    pub fn has_zero_initial_inventory(&self) -> bool {
        self.inventory.pipeline.iter().flatten().all(|&v| v == 0.0)
    }

    /// Lead time for moving stock from node `from` to node `to`.
    pub fn reposition_lead(&self, from: usize, to: usize) -> usize {
        self.inventory
            .reposition_lead
            .as_ref()
            .map_or(0, |m| m[from][to])
    }

    /// Check that every array is dimensioned consistently and that every
    /// name refers to a declared node or zone.
    pub fn check_structure(&self) -> Result<()> {
        let n = self.num_nodes();
        let nz = self.num_zones();
        let t = self.horizon;
        let e = &self.econ;
        let dims = |name: &str, got: usize, want: usize| -> Result<()> {
            if got != want {
                return Err(Error::Dimension(format!(
                    "{name}: expected {want} entries, found {got}"
                )));
            }
            Ok(())
        };
        let matrix = |name: &str, m: &Vec<Vec<f64>>, rows: usize, cols: usize| -> Result<()> {
            dims(name, m.len(), rows)?;
            for (i, r) in m.iter().enumerate() {
                dims(&format!("{name}[{i}]"), r.len(), cols)?;
            }
            Ok(())
        };
        matrix("econ.walkin_price", &e.walkin_price, t, n)?;
        matrix("econ.walkin_penalty", &e.walkin_penalty, t, n)?;
        dims("econ.online_price", e.online_price.len(), t)?;
        dims("econ.online_penalty", e.online_penalty.len(), t)?;
        dims("econ.holding", e.holding.len(), n)?;
        matrix("econ.fulfill_cost", &e.fulfill_cost, n, nz)?;
        dims("econ.purchase_cost", e.purchase_cost.len(), n)?;
        if let Some(rc) = &e.reposition_cost {
            matrix("econ.reposition_cost", rc, n, n)?;
        }
        let inv = &self.inventory;
        dims("inventory.lead_time", inv.lead_time.len(), n)?;
        dims("inventory.pipeline", inv.pipeline.len(), n)?;
        for (l, p) in inv.pipeline.iter().enumerate() {
            dims(
                &format!("inventory.pipeline[{l}]"),
                p.len(),
                inv.lead_time[l] + 1,
            )?;
        }
        if let Some(rl) = &inv.reposition_lead {
            dims("inventory.reposition_lead", rl.len(), n)?;
            for (i, r) in rl.iter().enumerate() {
                dims(&format!("inventory.reposition_lead[{i}]"), r.len(), n)?;
            }
        }
        let br = &self.business_rules;
        if let Some(c) = &br.transport_capacity {
            matrix("business_rules.transport_capacity", c, t, n)?;
        }
        if let Some(c) = &br.fulfillment_capacity {
            matrix("business_rules.fulfillment_capacity", c, t, n)?;
        }

        let net = &self.network;
        for w in &net.warehouses {
            if !net.nodes.contains(w) {
                return Err(Error::UnknownReference(format!(
                    "warehouse {w} is not a node"
                )));
            }
        }
        for s in &net.sfs_eligible {
            if !net.nodes.contains(s) {
                return Err(Error::UnknownReference(format!(
                    "sfs_eligible entry {s} is not a node"
                )));
            }
        }
        for edge in &net.ship_edges {
            if !net.nodes.contains(&edge.node) {
                return Err(Error::UnknownReference(format!(
                    "ship_edge references unknown node {}",
                    edge.node
                )));
            }
            if !net.zones.contains(&edge.zone) {
                return Err(Error::UnknownReference(format!(
                    "ship_edge references unknown zone {}",
                    edge.zone
                )));
            }
        }
        Ok(())
    }
}

fn push(out: &mut Vec<Violation>, rule: &'static str, indices: Vec<usize>, message: String) {
    out.push(Violation {
        rule,
        indices,
        message,
    });
}

/// All invariant violations of a structurally well-formed instance. An empty
/// list means the instance is valid.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Err(e) = inst.check_structure() {
        push(&mut out, "structure", vec![], e.to_string());
        return out;
    }
    let net = &inst.network;
    let e = &inst.econ;
    let n = inst.num_nodes();
    let nz = inst.num_zones();

    if inst.horizon == 0 {
        push(
            &mut out,
            "horizon",
            vec![],
            "horizon must be at least 1".into(),
        );
    }
    for (kind, ids) in [("node", &net.nodes), ("zone", &net.zones)] {
        let mut seen = HashSet::new();
        for (i, id) in ids.iter().enumerate() {
            if !seen.insert(id) {
                push(
                    &mut out,
                    "unique_ids",
                    vec![i],
                    format!("duplicate {kind} identifier {id}"),
                );
            }
        }
    }
    if net.nodes.contains(&net.supplier) {
        push(
            &mut out,
            "unique_ids",
            vec![],
            format!("supplier {} is also a node", net.supplier),
        );
    }

    let nonneg = |out: &mut Vec<Violation>, name: &str, idx: Vec<usize>, v: f64| {
        if !(v >= 0.0) || !v.is_finite() {
            push(out, "nonnegative", idx, format!("{name} = {v}"));
        }
    };
    for t in 0..inst.horizon {
        for l in 0..n {
            nonneg(&mut out, "walkin_price", vec![t, l], e.walkin_price[t][l]);
            nonneg(
                &mut out,
                "walkin_penalty",
                vec![t, l],
                e.walkin_penalty[t][l],
            );
        }
        nonneg(&mut out, "online_price", vec![t], e.online_price[t]);
        nonneg(&mut out, "online_penalty", vec![t], e.online_penalty[t]);
    }
    for l in 0..n {
        nonneg(&mut out, "holding", vec![l], e.holding[l]);
        nonneg(&mut out, "purchase_cost", vec![l], e.purchase_cost[l]);
        for z in 0..nz {
            nonneg(&mut out, "fulfill_cost", vec![l, z], e.fulfill_cost[l][z]);
        }
        for (j, &v) in inst.inventory.pipeline[l].iter().enumerate() {
            nonneg(&mut out, "pipeline", vec![l, j], v);
        }
    }
    if let Some(rc) = &e.reposition_cost {
        for (a, row) in rc.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                nonneg(&mut out, "reposition_cost", vec![a, b], v);
            }
        }
    }

    for t in 0..inst.horizon {
        for l in 0..n {
            for z in 0..nz {
                let walk = e.walkin_price[t][l] + e.walkin_penalty[t][l];
                let online = e.online_price[t] + e.online_penalty[t] - e.fulfill_cost[l][z];
                if walk <= online {
                    push(
                        &mut out,
                        "service_priority",
                        vec![t, l, z],
                        format!(
                            "walk-in price+penalty {walk} <= online price+penalty-cost {online}"
                        ),
                    );
                }
            }
        }
    }

    for t in 1..inst.horizon {
        for l in 0..n {
            for (name, arr) in [
                ("walkin_price", &e.walkin_price),
                ("walkin_penalty", &e.walkin_penalty),
            ] {
                if arr[t][l] > arr[t - 1][l] {
                    push(
                        &mut out,
                        "non_increasing",
                        vec![t, l],
                        format!("{name} rises from {} to {}", arr[t - 1][l], arr[t][l]),
                    );
                }
            }
        }
        for (name, arr) in [
            ("online_price", &e.online_price),
            ("online_penalty", &e.online_penalty),
        ] {
            if arr[t] > arr[t - 1] {
                push(
                    &mut out,
                    "non_increasing",
                    vec![t],
                    format!("{name} rises from {} to {}", arr[t - 1], arr[t]),
                );
            }
        }
    }

    let br = &inst.business_rules;
    for (name, cap) in [
        ("transport_capacity", &br.transport_capacity),
        ("fulfillment_capacity", &br.fulfillment_capacity),
    ] {
        if let Some(c) = cap {
            for (t, row) in c.iter().enumerate() {
                for (l, &v) in row.iter().enumerate() {
                    nonneg(&mut out, name, vec![t, l], v);
                }
            }
        }
    }
    if let Some(sw) = &br.service_window {
        if !(0.0..=1.0).contains(&sw.target_fraction) {
            push(
                &mut out,
                "service_fraction",
                vec![],
                format!("target_fraction {} outside [0, 1]", sw.target_fraction),
            );
        }
    }
    out
}

fn parse_error(path: &str, err: serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_string(),
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

/// Parse a JSON document into `T`, reporting line and column on failure.
pub(crate) fn from_json_str<T: serde::de::DeserializeOwned>(text: &str, path: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| parse_error(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(&shown, e))?;
    from_json_str(&text, &shown)
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let shown = path.display().to_string();
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(shown, e))
}

pub fn parse_instance(text: &str, source: &str) -> Result<Instance> {
    let inst: Instance = from_json_str(text, source)?;
    inst.check_structure()?;
    Ok(inst)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let inst: Instance = read_json(path.as_ref())?;
    inst.check_structure()?;
    Ok(inst)
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    write_json(inst, path.as_ref())
}

/// Walk-in only network of `n` stores with one period, zero lead time and no
/// initial stock. Handy for small examples and tests.
pub fn walkin_instance(n: usize, price: f64, penalty: f64, holding: f64, cost: f64) -> Instance {
    let nodes: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
    Instance {
        network: Network {
            nodes,
            warehouses: vec![],
            zones: vec![],
            supplier: "SUP".into(),
            sfs_eligible: vec![],
            ship_edges: vec![],
        },
        econ: EconParams {
            walkin_price: vec![vec![price; n]],
            walkin_penalty: vec![vec![penalty; n]],
            online_price: vec![0.0],
            online_penalty: vec![0.0],
            holding: vec![holding; n],
            fulfill_cost: vec![vec![]; n],
            purchase_cost: vec![cost; n],
            reposition_cost: None,
        },
        inventory: InventoryState {
            pipeline: vec![vec![0.0]; n],
            lead_time: vec![0; n],
            reposition_lead: None,
        },
        horizon: 1,
        business_rules: BusinessRules::default(),
    }
}
