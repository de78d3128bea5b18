//! Port intensities of the polarization interferometer for given circular
//! optical depths, with and without polarizer leakage.
//!
//! cargo run --example interferometer

use dichroic_filter::polarization_optics::{filter_outputs, InterferometerConfig};

fn main() -> dichroic_filter::Result<()> {
    let ideal = InterferometerConfig {
        polarizer_extinction: 0.0,
        window_transmission: 0.95,
        balance_error: 0.0,
    };
    let leaky = InterferometerConfig {
        polarizer_extinction: 1e-5,
        ..ideal
    };
    println!("{:>5} {:>5} {:>12} {:>12} {:>12}", "α_R", "α_L", "I_V ideal", "I_V ε=1e-5", "I_H ideal");
    for (r, l) in [(0.0, 0.0), (1.1, 1.1), (5.0, 0.3), (1.92, 0.05), (10.0, 0.0)] {
        let a = filter_outputs(r, l, &ideal)?;
        let b = filter_outputs(r, l, &leaky)?;
        println!("{r:>5} {l:>5} {:>12.6e} {:>12.6e} {:>12.6}", a.v, b.v, a.h);
    }
    Ok(())
}
