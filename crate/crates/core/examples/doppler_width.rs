//! Doppler width of the rubidium D1 line and the velocity grid used for
//! Doppler integrals.
//!
//! cargo run --example doppler_width

use dichroic_filter::atomic_data::{doppler_fwhm, AtomDatabase, VelocityGrid};

fn main() -> dichroic_filter::Result<()> {
    let db = AtomDatabase::builtin();
    for label in ["87Rb", "85Rb"] {
        let atom = db.get(label)?;
        for t in [293.15, 338.15, 373.15] {
            println!("{label} at {t:.2} K: FWHM {:.2} MHz", doppler_fwhm(atom, t)?);
        }
    }
    let atom = db.get("87Rb")?;
    let grid = VelocityGrid::standard(atom, 338.15)?;
    let norm = grid.integrate_thermal(|_| 1.0);
    let v2 = grid.integrate_thermal(|v| v * v);
    println!(
        "\n{} velocity classes over ±{:.0} m/s: ∫f = {norm:.12}, √<v²> = {:.3} m/s (σ_v = {:.3})",
        grid.len(),
        grid.span() / 2.0,
        v2.sqrt(),
        grid.sigma_v()
    );
    Ok(())
}
