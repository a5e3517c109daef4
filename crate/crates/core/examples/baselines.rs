//! Basestock and two-class piecewise-linear baselines on the synthetic
//! network.
//!
//! ```bash
//! cargo run --release --example baselines
//! ```

use bimodal_inventory::formulations::{basestock_policy, pwl_allocation};
use bimodal_inventory::instance::load_instance;
use bimodal_inventory::simulator::{batch_evaluate, repeat_means, with_horizon};
use bimodal_inventory::uncertainty::{load_means, poisson_quantile, sample_poisson};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic");

fn main() -> bimodal_inventory::Result<()> {
    let base = load_instance(format!("{DATA}/instance.json"))?;
    let weekly = load_means(format!("{DATA}/means.json"))?;
    let inst = with_horizon(&base, 2);
    let means = repeat_means(&weekly, 2);

    let bs = basestock_policy(&inst, &means)?;
    let mut q90 = means.clone();
    for row in q90.walkin.iter_mut().chain(q90.online.iter_mut()) {
        for v in row.iter_mut() {
            *v = f64::from(poisson_quantile(*v, 0.9));
        }
    }
    let pwl = pwl_allocation(&inst, &means, &q90, 0.5)?;

    let scenarios = sample_poisson(&means, 5000, 1)?;
    for (name, alloc) in [("basestock", &bs), ("pwl", &pwl)] {
        let stats = batch_evaluate(&inst, alloc, &scenarios)?;
        println!("{name:<10} x = {:?}", alloc.x[0]);
        println!(
            "{:<10} mean profit {:.2} (p05 {:.2}, median {:.2})",
            "", stats.mean, stats.p05, stats.median
        );
    }
    Ok(())
}
