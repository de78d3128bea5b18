//! Wigner 3j and 6j symbols and the D1 hyperfine line-strength table built
//! from them.
//!
//! cargo run --example wigner_symbols

use dichroic_filter::atomic_data::{transition_strengths, wigner3j, wigner6j, AtomDatabase, HalfInt};

fn main() -> dichroic_filter::Result<()> {
    let h = HalfInt::from_twice;
    println!("(1 1 1; 1 0 -1)         = {:+.12}", wigner3j(h(2), h(2), h(2), h(2), h(0), h(-2))?);
    println!("(1/2 1/2 1; 1/2 -1/2 0) = {:+.12}", wigner3j(h(1), h(1), h(2), h(1), h(-1), h(0))?);
    println!("{{1 1 1; 1 1 1}}         = {:+.12}", wigner6j(h(2), h(2), h(2), h(2), h(2), h(2))?);

    let db = AtomDatabase::builtin();
    let atom = db.get("87Rb")?;
    for fe in [1, 2] {
        let line = transition_strengths(atom, 2, fe)?;
        println!("\nF=2 -> F'={fe}, relative strengths by m_F:");
        println!("{:>4} {:>9} {:>9} {:>9}", "m", "σ-", "π", "σ+");
        for m in -2..=2 {
            println!("{m:>4} {:>9.5} {:>9.5} {:>9.5}", line.strength(m, -1), line.strength(m, 0), line.strength(m, 1));
        }
    }
    Ok(())
}
