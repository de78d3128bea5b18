//! Finds the saturation parameter that gives an 80 MHz feature and prints
//! the search trace.
//!
//! cargo run --release --example calibration

use dichroic_filter::atomic_data::AtomDatabase;
use dichroic_filter::pumping::PumpConfig;
use dichroic_filter::scan::{calibrate_to_reference, CalibrationTargets, SimulationConfig};

fn main() -> dichroic_filter::Result<()> {
    let atom = AtomDatabase::builtin().get("87Rb")?.clone();
    let cfg = SimulationConfig::new(atom, PumpConfig::new(0.0, 1.0));
    let cal = calibrate_to_reference(&cfg, &CalibrationTargets::default())?;
    for step in &cal.report.trace {
        println!("s = {:>12.6}  FWHM = {:>8.3} MHz", step.saturation_parameter, step.fwhm_mhz.unwrap_or(f64::NAN));
    }
    let m = &cal.report.metrics;
    println!(
        "\ns = {:.10}: od {:.6}, α_R/α_L = {:.3}/{:.4}, peak t_v {:.4}",
        cal.report.saturation_parameter, m.od_unpumped, m.alpha_r, m.alpha_l, m.peak_transmission
    );
    Ok(())
}
