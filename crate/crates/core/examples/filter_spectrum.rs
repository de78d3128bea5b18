//! Full filter spectrum from the shipped configuration, with the fitted
//! width of the main feature and the out-of-band extinction.
//!
//! cargo run --release --example filter_spectrum

use std::path::Path;

use dichroic_filter::config::RunConfig;
use dichroic_filter::scan::{find_peaks, simulate, spectrum_metrics};

fn main() -> dichroic_filter::Result<()> {
    let loaded = RunConfig::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.json")))?;
    let cfg = loaded.run.resolve(&loaded.base_dir)?;
    let run = simulate(&cfg)?;
    let m = spectrum_metrics(&cfg, &run)?;
    let spec = &run.spectrum;
    println!("{} probe points, floor {:.3e}", spec.len(), m.floor);
    for i in find_peaks(spec) {
        println!("peak at {:>7.1} MHz, t_v = {:.4}", spec.detunings[i], spec.t_v[i]);
    }
    println!(
        "main feature: center {:.2} MHz, FWHM {:.2} MHz; α_R = {:.3}, α_L = {:.4}; extinction {:.1} dB",
        m.feature_center_mhz.unwrap_or(f64::NAN),
        m.feature_fwhm_mhz.unwrap_or(f64::NAN),
        m.alpha_r,
        m.alpha_l,
        m.extinction_db.unwrap_or(f64::NAN)
    );
    Ok(())
}
