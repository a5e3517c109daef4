//! The in-crate LP/MIP solver on a small knapsack-style model.
//!
//! ```bash
//! cargo run --release --example lp_solver
//! ```

use bimodal_inventory::solver::{
    lp_format::to_lp_string, solve, solve_relaxation, LinearModel, ObjectiveSense, Sense, VarKind,
};

fn main() -> bimodal_inventory::Result<()> {
    let mut m = LinearModel::new(ObjectiveSense::Maximize);
    let values = [10.0, 13.0, 7.0, 8.0];
    let weights = [4.0, 6.0, 3.0, 5.0];
    let xs: Vec<_> = (0..4)
        .map(|i| m.add_var(format!("x{i}"), 0.0, 2.0, VarKind::Integer))
        .collect();
    for (x, v) in xs.iter().zip(values) {
        m.set_objective_coeff(*x, v);
    }
    m.add_constraint(
        "weight",
        xs.iter().copied().zip(weights).collect(),
        Sense::Le,
        17.0,
    );
    m.add_constraint("pair", vec![(xs[0], 1.0), (xs[1], 1.0)], Sense::Le, 3.0);

    print!("{}", to_lp_string(&m));
    let relaxed = solve_relaxation(&m)?;
    println!(
        "relaxation {:?}: {:.3} at {:?}",
        relaxed.status, relaxed.objective, relaxed.values
    );
    let sol = solve(&m)?;
    println!(
        "integer    {:?}: {:.3} at {:?} ({} nodes, {} pivots)",
        sol.status, sol.objective, sol.values, sol.stats.nodes, sol.stats.simplex_iterations
    );
    Ok(())
}
