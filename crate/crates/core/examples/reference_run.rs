//! Seeded rolling-horizon reference run on the shipped synthetic network.
//!
//! ```bash
//! cargo run --release --example reference_run            # compare with the fixture
//! cargo run --release --example reference_run -- --write # refresh the fixture
//! ```

use bimodal_inventory::reference::{
    load_reference_config, load_reference_fixture, save_reference_fixture, ReferenceFixture,
};

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/reference/config.json");
const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/reference/fixture.json");

fn main() -> bimodal_inventory::Result<()> {
    let cfg = load_reference_config(CONFIG)?;
    let results = cfg.rolling.run()?;
    let fixture = ReferenceFixture::from_results(&results)?;
    for p in &fixture.policies {
        println!(
            "{:<10} realized {:>9.2} ± {:>6.2}  penalized {:>9.2}  service {:.3}",
            p.policy,
            p.realized_profit,
            p.realized_profit_se,
            p.penalized_profit,
            p.total_service_level
        );
    }
    println!("bio_10 >= pure_ro: {}", fixture.bio_10_at_least_pure_ro);

    if std::env::args().any(|a| a == "--write") {
        save_reference_fixture(&fixture, FIXTURE)?;
        println!("wrote {FIXTURE}");
    } else {
        let shipped = load_reference_fixture(FIXTURE)?;
        println!("matches shipped fixture: {}", shipped == fixture);
    }
    Ok(())
}
