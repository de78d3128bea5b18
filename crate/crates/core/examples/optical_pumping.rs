//! Steady-state ground populations of one velocity class under σ⁺ pumping,
//! and how the resonant class empties into the dark stretched state.
//!
//! cargo run --example optical_pumping

use dichroic_filter::atomic_data::AtomDatabase;
use dichroic_filter::pumping::{PumpConfig, PumpingScheme, RelaxationConfig};

fn main() -> dichroic_filter::Result<()> {
    let db = AtomDatabase::builtin();
    let scheme = PumpingScheme::new(db.get("87Rb")?)?;
    let relax = RelaxationConfig::default();

    print!("{:>8}", "s");
    for sl in scheme.sublevels() {
        print!("  F={},m={:+}", sl.f, sl.m);
    }
    println!();
    for s in [0.0, 1.0, 10.0, 100.0, 1000.0] {
        let pump = PumpConfig::new(0.0, s);
        let p = scheme.steady_state_at(0.0, &pump, &relax)?;
        print!("{s:>8}");
        for x in &p {
            print!("  {x:>8.5}");
        }
        println!();
    }
    Ok(())
}
