//! Circular birefringence implied by the dichroism through the
//! Kramers-Kronig relation, and its effect on the V port away from the peak.
//!
//! cargo run --release --example kramers_kronig

use dichroic_filter::atomic_data::AtomDatabase;
use dichroic_filter::dichroism::differential_phase;
use dichroic_filter::polarization_optics::{filter_outputs, filter_outputs_with_phase};
use dichroic_filter::pumping::PumpConfig;
use dichroic_filter::scan::{simulate_on, SimulationConfig};

fn main() -> dichroic_filter::Result<()> {
    let atom = AtomDatabase::builtin().get("87Rb")?.clone();
    let pump = PumpConfig::new(0.0, 1.93);
    let cfg = SimulationConfig::new(atom, pump);
    // a uniform grid wide enough for the transform's tails
    let detunings: Vec<f64> = (0..=6000).map(|i| -3000.0 + i as f64).collect();
    let a = simulate_on(&cfg, &detunings)?.absorption;
    let phase = differential_phase(&a)?;
    println!("{:>8} {:>10} {:>12} {:>12}", "δ/MHz", "φ/rad", "t_v", "t_v with φ");
    for d in [-300i64, -150, -80, -40, 0, 40, 80, 150, 300] {
        let i = (d + 3000) as usize;
        let plain = filter_outputs(a.alpha_r[i], a.alpha_l[i], &cfg.interferometer)?.v;
        let with = filter_outputs_with_phase(a.alpha_r[i], a.alpha_l[i], phase[i], &cfg.interferometer)?.v;
        println!("{d:>8} {:>10.4} {plain:>12.4e} {with:>12.4e}", phase[i]);
    }
    Ok(())
}
