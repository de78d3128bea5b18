//! Pump-detuning sweep: the transmission peak follows -Δp, and its height
//! traces the Doppler envelope.
//!
//! cargo run --release --example tunability

use std::path::Path;

use dichroic_filter::config::RunConfig;
use dichroic_filter::scan::{detuning_sweep, tunability_scan};

fn main() -> dichroic_filter::Result<()> {
    let loaded = RunConfig::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.json")))?;
    let cfg = loaded.run.resolve(&loaded.base_dir)?;
    let scan = tunability_scan(&detuning_sweep(-300.0, 300.0, 50.0)?, &cfg)?;
    println!("{:>8} {:>10} {:>8}", "Δp/MHz", "center", "t_v");
    for i in 0..scan.pump_detunings.len() {
        println!(
            "{:>8.0} {:>10.2} {:>8.4}",
            scan.pump_detunings[i], scan.peak_centers[i], scan.peak_transmissions[i]
        );
    }
    let (slope, intercept) = scan.center_slope(250.0)?;
    println!("center = {slope:.4}·Δp + {intercept:.3} MHz");
    Ok(())
}
