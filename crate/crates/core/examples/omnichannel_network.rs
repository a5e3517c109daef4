//! Ship-from-store network: worst case of a stocking plan, the recourse
//! fulfillment under one scenario, and repositioning.
//!
//! ```bash
//! cargo run --release --example omnichannel_network
//! ```

use bimodal_inventory::ccg::{solve_two_stage, worst_case_value, CcgOptions, SubproblemMode};
use bimodal_inventory::formulations::{evaluate_allocation, BioConfig};
use bimodal_inventory::simulator::with_horizon;
use bimodal_inventory::synthetic::{generate_synthetic, SyntheticParams};
use bimodal_inventory::uncertainty::quantile_bounds_from_means;

fn main() -> bimodal_inventory::Result<()> {
    let params = SyntheticParams {
        stores: 2,
        dcs: 1,
        zones: 2,
        horizon: 1,
        lead_time: (0, 0),
        ..SyntheticParams::default()
    };
    let s = generate_synthetic(&params, 4)?;
    let inst = with_horizon(&s.instance, 1);
    let set = quantile_bounds_from_means(&s.weekly_means, 0.1, 0.9)?;
    println!(
        "nodes {:?}, zones {:?}",
        inst.network.nodes, inst.network.zones
    );

    for mode in [SubproblemMode::ExactMip, SubproblemMode::AhThenMip] {
        let options = CcgOptions {
            subproblem_mode: mode,
            ..CcgOptions::default()
        };
        let r = solve_two_stage(&inst, &set, &BioConfig::with_lambda(0.25), &options)?;
        println!(
            "{mode:?}: x = {:?}, objective {:.2}, {} iterations, {:?}",
            r.allocation.x[0], r.objective, r.iterations, r.termination
        );
        let (worst, d) = worst_case_value(&inst, &set, &r.allocation)?;
        println!(
            "  worst case {worst:.2}: walk-in {:?}, online {:?}",
            d.walkin[0], d.online[0]
        );
        let plan = evaluate_allocation(&inst, &r.allocation, &d)?;
        println!(
            "  sales {:?}, shipments {:?}",
            plan.walkin_sales[0], plan.fulfillment[0]
        );
    }
    Ok(())
}
