//! BIO-λ as a blend of the pure robust and fully optimistic solutions, and
//! the single-store closed form.
//!
//! ```bash
//! cargo run --release --example superposition
//! ```

use bimodal_inventory::ccg::CcgOptions;
use bimodal_inventory::formulations::BioConfig;
use bimodal_inventory::instance::walkin_instance;
use bimodal_inventory::tuning::{closed_form_single_location, verify_superposition};
use bimodal_inventory::uncertainty::{ChannelBounds, UncertaintySet};

fn main() -> bimodal_inventory::Result<()> {
    let inst = walkin_instance(3, 80.0, 80.0, 0.0, 40.0);
    let set = UncertaintySet {
        walkin: ChannelBounds::uniform(1, &[0, 0, 0], &[3, 3, 3], (1, 6)),
        online: ChannelBounds::zero(1, 0),
    };
    for lambda in [0.25, 0.5, 0.75] {
        let r = verify_superposition(
            &inst,
            &set,
            lambda,
            &BioConfig::default(),
            &CcgOptions::default(),
        )?;
        println!(
            "λ = {lambda}: Z0 {:.2}, Z1 {:.2}, Zλ {:.2}, residual {:.1e}, blended x {:?}",
            r.z0, r.z1, r.z_lambda, r.residual, r.superposed.x[0]
        );
    }

    let (p, b, h, c) = (80.0, 80.0, 0.0, 40.0);
    let cf = closed_form_single_location(p, b, h, c, 1.0, 6.0)?;
    println!("single store, demand in [1, 6]: {cf:?}");
    Ok(())
}
