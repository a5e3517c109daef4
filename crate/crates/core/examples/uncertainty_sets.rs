//! Box-and-budget sets: discrete points, exact vertices, sampling.
//!
//! ```bash
//! cargo run --release --example uncertainty_sets
//! ```

use bimodal_inventory::uncertainty::{
    enumerate_discrete_points, enumerate_vertices, is_integral, quantile_bounds_from_means,
    sample_uniform, to_f64, Channel, ChannelBounds, DemandScenario, UncertaintySet,
};

fn main() -> bimodal_inventory::Result<()> {
    let set = UncertaintySet {
        walkin: ChannelBounds::uniform(1, &[0, 0, 0], &[3, 3, 3], (1, 6)),
        online: ChannelBounds::zero(1, 0),
    };
    let points = enumerate_discrete_points(&set, Channel::Walkin, 0)?;
    println!("{} integer demand points", points.len());

    let vertices = enumerate_vertices(&set, Channel::Walkin, 0)?;
    println!(
        "{} vertices, all integral: {}",
        vertices.len(),
        vertices.iter().all(|v| is_integral(v))
    );
    for v in vertices.iter().take(5) {
        println!("  {:?}", to_f64(v));
    }

    let means = DemandScenario {
        walkin: vec![vec![1.5, 3.0, 0.5]],
        online: vec![vec![4.0, 2.0]],
    };
    let q = quantile_bounds_from_means(&means, 0.05, 0.95)?;
    println!(
        "quantile box walk-in {:?}..{:?}, budget {:?}..{:?}",
        q.walkin.lower[0], q.walkin.upper[0], q.walkin.budget_lower, q.walkin.budget_upper
    );
    for s in sample_uniform(&q, 3, 5)? {
        println!("  uniform draw {:?} / {:?}", s.walkin[0], s.online[0]);
    }
    Ok(())
}
