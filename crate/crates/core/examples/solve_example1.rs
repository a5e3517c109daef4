//! Pure RO and BIO-50% on the three-store walk-in example, integer orders.
//!
//! ```bash
//! cargo run --release --example solve_example1
//! ```

use bimodal_inventory::ccg::{solve_two_stage, worst_case_value, CcgOptions};
use bimodal_inventory::formulations::BioConfig;
use bimodal_inventory::instance::load_instance;
use bimodal_inventory::uncertainty::load_uncertainty_set;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/example1");

fn main() -> bimodal_inventory::Result<()> {
    let inst = load_instance(format!("{DATA}/instance.json"))?;
    let set = load_uncertainty_set(format!("{DATA}/set.json"))?;

    for lambda in [0.0, 0.5] {
        let cfg = BioConfig {
            integer_allocations: true,
            ..BioConfig::with_lambda(lambda)
        };
        let report = solve_two_stage(&inst, &set, &cfg, &CcgOptions::default())?;
        let (worst, scenario) = worst_case_value(&inst, &set, &report.allocation)?;
        println!("λ = {lambda}");
        println!("  allocation      {:?}", report.allocation.x[0]);
        println!("  objective       {:.2}", report.objective);
        println!("  worst case      {:.2} at {:?}", worst, scenario.walkin[0]);
        if let Some(d) = &report.d_plus {
            println!("  optimistic D+   {:?}", d.walkin[0]);
        }
        for rec in &report.trace {
            println!(
                "  iter {:>2}: LB {:>8.2} UB {:>8.2} gap {:.2e}",
                rec.iteration, rec.lower_bound, rec.upper_bound, rec.gap
            );
        }
    }
    Ok(())
}
