//! Realized profit distribution of fixed allocations over Poisson demand.
//!
//! ```bash
//! cargo run --release --example monte_carlo
//! ```

use bimodal_inventory::formulations::Allocation;
use bimodal_inventory::instance::load_instance;
use bimodal_inventory::reference::load_reference_config;
use bimodal_inventory::simulator::batch_evaluate;
use bimodal_inventory::uncertainty::{load_means, sample_poisson};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn main() -> bimodal_inventory::Result<()> {
    let inst = load_instance(format!("{DATA}/example1/instance.json"))?;
    let means = load_means(format!("{DATA}/example1/means.json"))?;
    let mc = load_reference_config(format!("{DATA}/reference/config.json"))?.monte_carlo;
    let scenarios = sample_poisson(&means, mc.samples, mc.seed)?;

    println!(
        "{:<8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "x", "min", "p05", "p10", "median", "max", "mean"
    );
    for units in [3.0, 2.0] {
        let alloc = Allocation {
            x: vec![vec![units; 3]],
            ..Allocation::zeros(1, 3)
        };
        let s = batch_evaluate(&inst, &alloc, &scenarios)?;
        println!(
            "{:<8} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
            format!("{:?}", [units; 3]),
            s.min,
            s.p05,
            s.p10,
            s.median,
            s.max,
            s.mean
        );
    }
    Ok(())
}
