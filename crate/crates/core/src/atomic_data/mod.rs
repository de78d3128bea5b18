//! Rubidium D1 reference data, hyperfine line strengths and the thermal
//! velocity distribution.

mod angular;
mod doppler;
mod reference;

pub use angular::{wigner3j, wigner6j, HalfInt};
pub use doppler::{doppler_fwhm, doppler_sigma, maxwell_boltzmann_pdf, VelocityGrid, BOLTZMANN};
pub use reference::{AtomDatabase, AtomRecord, AtomSpec};

use crate::error::{Error, Result};

/// Dipole polarization components, `q = -1, 0, +1`.
pub const POLARIZATIONS: [i32; 3] = [-1, 0, 1];

/// One hyperfine component `F -> F'` of the D1 line.
///
/// `strengths` is indexed by ground `m_F` and dipole component `q`; the
/// table is normalized so that each ground sublevel's strengths, summed
/// over `q` and over every excited `F'`, add up to one.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperfineLine {
    pub ground_f: i32,
    pub excited_f: i32,
    /// Line center in MHz relative to the zero-velocity `F = I+1/2 -> F' = I-1/2`
    /// resonance of the reference isotope.
    pub detuning_offset: f64,
    strengths: Vec<[f64; 3]>,
}

impl HyperfineLine {
    /// Relative strength from ground `m_F` with photon component `q`.
    ///
    /// Zero outside the ground manifold and for `|m_F + q| > F'`.
    pub fn strength(&self, m: i32, q: i32) -> f64 {
        if m.abs() > self.ground_f || q.abs() > 1 {
            return 0.0;
        }
        self.strengths[(m + self.ground_f) as usize][(q + 1) as usize]
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.detuning_offset = offset;
        self
    }

    /// Ground magnetic quantum numbers `-F..=F`.
    pub fn ground_ms(&self) -> impl Iterator<Item = i32> {
        -self.ground_f..=self.ground_f
    }
}

/// Builds the strength table of the `F_g -> F_e` component of the D1 line.
///
/// strength(m, q) = (2J'+1)(2F_e+1)(2F_g+1) (F_e 1 F_g; m+q -q -m)^2 {J' J 1; F_g F_e I}^2
///
/// The `(2J'+1)` prefactor normalizes the per-sublevel sum over `q` and `F_e` to one.
pub fn transition_strengths(atom: &AtomSpec, ground_f: i32, excited_f: i32) -> Result<HyperfineLine> {
    let i = atom.nuclear_spin;
    let j = atom.ground_j();
    let jp = atom.excited_j();
    check_allowed(i, j, ground_f, "ground")?;
    check_allowed(i, jp, excited_f, "excited")?;

    let fg = HalfInt::integer(ground_f);
    let fe = HalfInt::integer(excited_f);
    let six_j = wigner6j(jp, j, HalfInt::ONE, fg, fe, i)?;
    let prefactor = f64::from(jp.twice() + 1)
        * f64::from(2 * excited_f + 1)
        * f64::from(2 * ground_f + 1)
        * six_j
        * six_j;

    let mut strengths = Vec::with_capacity((2 * ground_f + 1) as usize);
    for m in -ground_f..=ground_f {
        let mut row = [0.0; 3];
        for q in POLARIZATIONS {
            let me = m + q;
            if me.abs() > excited_f {
                continue;
            }
            let three_j = wigner3j(
                fe,
                HalfInt::ONE,
                fg,
                HalfInt::integer(me),
                HalfInt::integer(-q),
                HalfInt::integer(-m),
            )?;
            row[(q + 1) as usize] = prefactor * three_j * three_j;
        }
        strengths.push(row);
    }

    Ok(HyperfineLine {
        ground_f,
        excited_f,
        detuning_offset: 0.0,
        strengths,
    })
}

fn check_allowed(i: HalfInt, j: HalfInt, f: i32, which: &str) -> Result<()> {
    let lo = (i.twice() - j.twice()).abs();
    let hi = i.twice() + j.twice();
    let tf = 2 * f;
    if tf < lo || tf > hi || (tf - lo) % 2 != 0 {
        return Err(Error::invalid(format!(
            "{which} F = {f} is not allowed for I = {i}, J = {j}"
        )));
    }
    Ok(())
}
