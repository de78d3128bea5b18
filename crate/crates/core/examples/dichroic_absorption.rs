//! α_R and α_L of the pumped vapor across the F=2 → F'=1,2 lines.
//!
//! cargo run --example dichroic_absorption

use dichroic_filter::atomic_data::AtomDatabase;
use dichroic_filter::pumping::PumpConfig;
use dichroic_filter::scan::{simulate_on, SimulationConfig};

fn main() -> dichroic_filter::Result<()> {
    let atom = AtomDatabase::builtin().get("87Rb")?.clone();
    let pump = PumpConfig::new(0.0, 1.93);
    let cfg = SimulationConfig::new(atom, pump);
    let detunings: Vec<f64> = (-12..=20).map(|i| 50.0 * i as f64).collect();
    let run = simulate_on(&cfg, &detunings)?;
    println!("OD scale C = {:.6e}", run.od_scale);
    println!("{:>8} {:>9} {:>9}", "δ/MHz", "α_R", "α_L");
    let a = &run.absorption;
    for i in 0..a.len() {
        println!("{:>8.0} {:>9.4} {:>9.4}", a.detunings[i], a.alpha_r[i], a.alpha_l[i]);
    }
    Ok(())
}
