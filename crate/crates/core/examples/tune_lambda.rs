//! Select λ on Poisson samples by grid search and by bisection.
//!
//! ```bash
//! cargo run --release --example tune_lambda
//! ```

use bimodal_inventory::ccg::CcgOptions;
use bimodal_inventory::formulations::BioConfig;
use bimodal_inventory::instance::load_instance;
use bimodal_inventory::tuning::{split_scenarios, tune_lambda, ScoringObjective, TuneMethod};
use bimodal_inventory::uncertainty::{load_means, load_uncertainty_set, sample_poisson};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/example1");

fn main() -> bimodal_inventory::Result<()> {
    let inst = load_instance(format!("{DATA}/instance.json"))?;
    let set = load_uncertainty_set(format!("{DATA}/set.json"))?;
    let means = load_means(format!("{DATA}/means.json"))?;
    let scenarios = sample_poisson(&means, 2000, 11)?;
    let (validation, holdout) = split_scenarios(&scenarios, 0.7);

    let objectives = [
        ScoringObjective::Mean,
        ScoringObjective::Cvar { level: 0.1 },
        ScoringObjective::WorstCase,
    ];
    for objective in &objectives {
        for method in [TuneMethod::default_grid(), TuneMethod::Bisection] {
            let r = tune_lambda(
                &inst,
                &set,
                validation,
                holdout,
                objective,
                &method,
                &BioConfig::default(),
                &CcgOptions::default(),
            )?;
            let name = match method {
                TuneMethod::Grid { .. } => "grid",
                TuneMethod::Bisection => "bisection",
            };
            println!(
                "{objective:?} / {name}: λ = {:.4}, score {:.2}, holdout {:.2}, x = {:?}",
                r.lambda,
                r.score,
                r.holdout_score.unwrap_or(f64::NAN),
                r.allocation.x[0]
            );
        }
    }
    Ok(())
}
