//! Shipped reference configuration and the seeded rolling-horizon fixture.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{read_json, write_json};
use crate::simulator::{run_rolling_horizon, PolicySpec, SimulationConfig, SimulationResult};
use crate::synthetic::{generate_synthetic, SyntheticInstance, SyntheticParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloReference {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RollingReference {
    pub synthetic_seed: u64,
    pub synthetic: SyntheticParams,
    pub simulation: SimulationConfig,
    pub policies: Vec<PolicySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub monte_carlo: MonteCarloReference,
    pub rolling: RollingReference,
}

/// Per-policy summary kept as a regression fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySummary {
    pub policy: String,
    pub realized_profit: f64,
    pub realized_profit_se: f64,
    pub penalized_profit: f64,
    pub total_service_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceFixture {
    pub policies: Vec<PolicySummary>,
    /// Whether BIO-10% realized at least as much profit as pure RO.
    pub bio_10_at_least_pure_ro: bool,
}

impl ReferenceFixture {
    pub fn from_results(results: &[SimulationResult]) -> Result<Self> {
        let policies: Vec<PolicySummary> = results
            .iter()
            .map(|r| PolicySummary {
                policy: r.policy.clone(),
                realized_profit: r.mean.realized_profit,
                realized_profit_se: r.std_error.realized_profit,
                penalized_profit: r.mean.penalized_profit,
                total_service_level: r.mean.total_service_level,
            })
            .collect();
        let find = |name: &str| {
            policies
                .iter()
                .find(|p| p.policy == name)
                .map(|p| p.realized_profit)
                .ok_or_else(|| {
                    Error::UnknownReference(format!("policy {name} missing from reference run"))
                })
        };
        let bio_10_at_least_pure_ro = find("bio_10")? >= find("pure_ro")?;
        Ok(Self {
            policies,
            bio_10_at_least_pure_ro,
        })
    }
}

pub fn load_reference_config(path: impl AsRef<Path>) -> Result<ReferenceConfig> {
    read_json(path.as_ref())
}

pub fn load_reference_fixture(path: impl AsRef<Path>) -> Result<ReferenceFixture> {
    read_json(path.as_ref())
}

pub fn save_reference_fixture(fixture: &ReferenceFixture, path: impl AsRef<Path>) -> Result<()> {
    write_json(fixture, path.as_ref())
}

impl RollingReference {
    pub fn instance(&self) -> Result<SyntheticInstance> {
        generate_synthetic(&self.synthetic, self.synthetic_seed)
    }

    /// Every policy on the seeded synthetic instance, in listed order.
    pub fn run(&self) -> Result<Vec<SimulationResult>> {
        let s = self.instance()?;
        self.policies
            .iter()
            .map(|p| run_rolling_horizon(&s.instance, &s.weekly_means, p, &self.simulation))
            .collect()
    }
}
