//! Circular optical depths of the pumped vapor seen by the probe.
//!
//! The probe counter-propagates the pump: an atom moving at `+v` (along the
//! pump) sees probe detuning `δ + k v`. Probe handedness is defined in the
//! probe's own frame, so with the default helicity convention R drives `σ⁻`
//! and L drives `σ⁺` on the pump's quantization axis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic_data::{transition_strengths, AtomSpec, HyperfineLine, VelocityGrid};
use crate::error::{Error, Result};
use crate::pumping::{lorentzian, PopulationField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub length_m: f64,
    pub temperature_k: f64,
    /// Unpumped optical depth at the `F=2 -> F'=1` Doppler peak.
    pub target_od: f64,
    #[serde(default)]
    pub include_85rb: bool,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            length_m: 0.15,
            temperature_k: 338.15,
            target_od: 1.1,
            include_85rb: false,
        }
    }
}

impl CellConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("cell: field `{name}` must be > 0, got {x}")))
            }
        };
        check("length_m", self.length_m)?;
        check("temperature_k", self.temperature_k)?;
        check("target_od", self.target_od)
    }
}

/// Circular handedness of the probe in its own frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Circular {
    R,
    L,
}

/// How probe handedness maps onto `σ±` of the pump axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeHelicity {
    /// Counter-propagating probe: R → σ⁻, L → σ⁺.
    #[default]
    CounterPropagating,
    /// Flipped mapping: R → σ⁺, L → σ⁻.
    CoPropagating,
}

impl ProbeHelicity {
    pub fn q(self, label: Circular) -> i32 {
        match (self, label) {
            (ProbeHelicity::CounterPropagating, Circular::R) => -1,
            (ProbeHelicity::CounterPropagating, Circular::L) => 1,
            (ProbeHelicity::CoPropagating, Circular::R) => 1,
            (ProbeHelicity::CoPropagating, Circular::L) => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSettings {
    /// Homogeneous width of the weak probe, MHz.
    pub homogeneous_width_mhz: f64,
    pub helicity: ProbeHelicity,
}

impl ProbeSettings {
    pub fn natural(atom: &AtomSpec) -> Self {
        Self {
            homogeneous_width_mhz: atom.natural_linewidth,
            helicity: ProbeHelicity::CounterPropagating,
        }
    }
}

/// α_R and α_L sampled on a probe-detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DichroicAbsorption {
    pub detunings: Vec<f64>,
    pub alpha_r: Vec<f64>,
    pub alpha_l: Vec<f64>,
}

impl DichroicAbsorption {
    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// `(α_R + α_L)/2` at every point.
    pub fn alpha_plus(&self) -> Vec<f64> {
        self.alpha_r.iter().zip(&self.alpha_l).map(|(r, l)| 0.5 * (r + l)).collect()
    }

    /// `(α_R - α_L)/2` at every point.
    pub fn alpha_minus(&self) -> Vec<f64> {
        self.alpha_r.iter().zip(&self.alpha_l).map(|(r, l)| 0.5 * (r - l)).collect()
    }
}

/// Lines probed from the upper ground level `F = I+1/2`, placed on the
/// detuning axis.
pub fn upper_ground_lines(atom: &AtomSpec) -> Result<Vec<HyperfineLine>> {
    let (_, g_hi) = atom.ground_levels();
    let (e_lo, e_hi) = atom.excited_levels();
    Ok(vec![
        transition_strengths(atom, g_hi, e_lo)?.with_offset(atom.line_offset),
        transition_strengths(atom, g_hi, e_hi)?.with_offset(atom.line_offset + atom.excited_splitting),
    ])
}

/// All four D1 hyperfine lines of `atom`.
pub fn all_lines(atom: &AtomSpec) -> Result<Vec<HyperfineLine>> {
    let (g_lo, _) = atom.ground_levels();
    let (e_lo, e_hi) = atom.excited_levels();
    let mut lines = upper_ground_lines(atom)?;
    let base = atom.line_offset + atom.ground_splitting;
    lines.push(transition_strengths(atom, g_lo, e_lo)?.with_offset(base));
    lines.push(transition_strengths(atom, g_lo, e_hi)?.with_offset(base + atom.excited_splitting));
    Ok(lines)
}

/// Doppler integral of one circular component before the OD scale:
/// Σ_lines Σ_m strength(m, q) ∫ f(v) p_m(v) L(δ + k v - offset) dv.
fn unscaled_alpha(
    pop: &PopulationField,
    lines: &[HyperfineLine],
    atom: &AtomSpec,
    probe: &ProbeSettings,
    q: i32,
    detunings: &[f64],
) -> Vec<f64> {
    let grid = pop.grid();
    let k = atom.wavevector_mhz_per_mps();
    let sublevels = pop.sublevels();

    // Velocity-resolved weights per line, independent of δ.
    let per_line: Vec<(f64, Vec<(f64, f64)>)> = lines
        .iter()
        .map(|line| {
            let idx: Vec<(usize, f64)> = line
                .ground_ms()
                .filter_map(|m| {
                    let s = line.strength(m, q);
                    let pos = sublevels.iter().position(|sl| sl.f == line.ground_f && sl.m == m)?;
                    (s > 0.0).then_some((pos, s))
                })
                .collect();
            let weights = (0..grid.len())
                .map(|i| {
                    let class = pop.class(i);
                    let w: f64 = idx.iter().map(|&(pos, s)| s * class[pos]).sum();
                    (k * grid.points()[i], grid.weights()[i] * grid.density()[i] * w)
                })
                .filter(|&(_, w)| w != 0.0)
                .collect();
            (line.detuning_offset, weights)
        })
        .collect();

    let width = probe.homogeneous_width_mhz;
    detunings
        .par_iter()
        .map(|&delta| {
            per_line
                .iter()
                .map(|(offset, weights)| {
                    weights
                        .iter()
                        .map(|&(shift, w)| w * lorentzian(delta + shift - offset, width))
                        .sum::<f64>()
                })
                .sum()
        })
        .collect()
}

/// OD scale `C` such that the thermal α at zero detuning equals `target_od`.
pub fn calibrate_od_scale(
    cell: &CellConfig,
    atom: &AtomSpec,
    grid: &VelocityGrid,
    probe: &ProbeSettings,
) -> Result<f64> {
    cell.validate()?;
    let thermal = PopulationField::thermal(grid, atom)?;
    let lines = upper_ground_lines(atom)?;
    let q = probe.helicity.q(Circular::R);
    let peak = unscaled_alpha(&thermal, &lines, atom, probe, q, &[atom.line_offset])[0];
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::config(format!(
            "unpumped absorption at the F=2 -> F'=1 peak is {peak}; cannot calibrate optical depth"
        )));
    }
    Ok(cell.target_od / peak)
}

/// A thermal, unpolarized absorber sharing the probe path (85Rb).
#[derive(Debug, Clone)]
pub struct BackgroundAbsorber {
    atom: AtomSpec,
    populations: PopulationField,
    lines: Vec<HyperfineLine>,
    relative_density: f64,
}

impl BackgroundAbsorber {
    /// `reference` is the pumped isotope whose OD scale is reused; density
    /// follows the natural abundance ratio.
    pub fn new(atom: &AtomSpec, reference: &AtomSpec, temperature: f64, grid_points: usize) -> Result<Self> {
        if !(reference.abundance > 0.0) {
            return Err(Error::config(format!(
                "isotope `{}` has zero abundance; cannot scale a background absorber to it",
                reference.label
            )));
        }
        let grid = VelocityGrid::new(atom, temperature, 4.5, grid_points)?;
        Ok(Self {
            populations: PopulationField::thermal(&grid, atom)?,
            lines: all_lines(atom)?,
            relative_density: atom.abundance / reference.abundance,
            atom: atom.clone(),
        })
    }

    fn alpha(&self, scale: f64, probe: &ProbeSettings, detunings: &[f64]) -> Vec<f64> {
        let q = probe.helicity.q(Circular::R);
        unscaled_alpha(&self.populations, &self.lines, &self.atom, probe, q, detunings)
            .into_iter()
            .map(|a| a * scale * self.relative_density)
            .collect()
    }
}

fn check_grid(detunings: &[f64]) -> Result<()> {
    if detunings.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("probe grid contains non-finite detunings"));
    }
    if !detunings.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::invalid("probe grid must be strictly increasing"));
    }
    Ok(())
}

/// α_R(δ) and α_L(δ) for the populations `pop` of the reference isotope.
///
/// Only the upper ground level contributes; the lower one lies a full ground
/// splitting away from the scanned window.
pub fn absorption_coefficients(
    pop: &PopulationField,
    atom: &AtomSpec,
    scale: f64,
    probe: &ProbeSettings,
    detunings: &[f64],
    background: Option<&BackgroundAbsorber>,
) -> Result<DichroicAbsorption> {
    check_grid(detunings)?;
    if pop.fractions().iter().any(|p| !p.is_finite()) {
        return Err(Error::numeric("dichroism", "populations contain NaN or infinite values"));
    }
    let lines = upper_ground_lines(atom)?;
    let alpha_for = |label| {
        unscaled_alpha(pop, &lines, atom, probe, probe.helicity.q(label), detunings)
            .into_iter()
            .map(|a| a * scale)
            .collect::<Vec<f64>>()
    };
    let mut alpha_r = alpha_for(Circular::R);
    let mut alpha_l = alpha_for(Circular::L);
    if let Some(bg) = background {
        let extra = bg.alpha(scale, probe, detunings);
        for ((r, l), e) in alpha_r.iter_mut().zip(alpha_l.iter_mut()).zip(extra) {
            *r += e;
            *l += e;
        }
    }
    Ok(DichroicAbsorption {
        detunings: detunings.to_vec(),
        alpha_r,
        alpha_l,
    })
}

/// Discrete Hilbert transform on a uniform grid (Maclaurin's odd/even rule),
/// `H[f](x) = (1/π) P∫ f(t)/(x - t) dt`.
pub fn hilbert_transform(values: &[f64]) -> Vec<f64> {
    let n = values.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            let mut j = if i % 2 == 0 { 1 } else { 0 };
            while j < n {
                acc += values[j as usize] / (i - j) as f64;
                j += 2;
            }
            acc * 2.0 / std::f64::consts::PI
        })
        .collect()
}

/// Circular-birefringence phase implied by the dichroism through the
/// Kramers-Kronig relation: the Hilbert transform of `α_−/2`.
///
/// Not part of the headline outputs; feed it to
/// [`crate::polarization_optics::filter_outputs_with_phase`] to study the
/// line wings.
pub fn differential_phase(d: &DichroicAbsorption) -> Result<Vec<f64>> {
    let x = &d.detunings;
    if x.len() < 3 {
        return Err(Error::invalid("need at least three grid points for a Hilbert transform"));
    }
    let step = x[1] - x[0];
    if !x.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs()) || step <= 0.0 {
        return Err(Error::invalid("differential phase requires a uniform increasing grid"));
    }
    let half_minus: Vec<f64> = d.alpha_minus().into_iter().map(|a| 0.5 * a).collect();
    Ok(hilbert_transform(&half_minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic_data::AtomDatabase;

    fn rb87() -> AtomSpec {
        AtomDatabase::builtin().get("87Rb").unwrap().clone()
    }

    #[test]
    fn hilbert_of_lorentzian() {
        // unit-peak Lorentzian of half width 1 on a wide uniform grid
        let h = 0.1;
        let xs: Vec<f64> = (-10000..=10000).map(|i| i as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|x| 1.0 / (1.0 + x * x)).collect();
        let g = hilbert_transform(&f);
        let mid = 10000;
        for off in [-20, -10, 0, 10, 20] {
            let k = (mid as isize + off) as usize;
            let x = xs[k];
            let exact = x / (1.0 + x * x);
            assert!((g[k] - exact).abs() < 2e-3, "x={x}");
        }
        let peak = g.iter().cloned().fold(f64::MIN, f64::max);
        assert!((peak - 0.5).abs() < 2e-3, "{peak}");
    }

    #[test]
    fn zero_dichroism_zero_phase() {
        let d = DichroicAbsorption {
            detunings: (0..50).map(|i| i as f64).collect(),
            alpha_r: vec![0.4; 50],
            alpha_l: vec![0.4; 50],
        };
        assert!(differential_phase(&d).unwrap().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn symmetric_input_antisymmetric_phase() {
        let xs: Vec<f64> = (-200..=200).map(|i| i as f64).collect();
        let d = DichroicAbsorption {
            alpha_r: xs.iter().map(|x| 2.0 * (-x * x / 800.0).exp()).collect(),
            alpha_l: vec![0.0; xs.len()],
            detunings: xs,
        };
        let p = differential_phase(&d).unwrap();
        let n = p.len();
        for i in 0..n {
            assert!((p[i] + p[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn non_uniform_grid_rejected() {
        let d = DichroicAbsorption {
            detunings: vec![0.0, 1.0, 3.0],
            alpha_r: vec![0.0; 3],
            alpha_l: vec![0.0; 3],
        };
        assert!(differential_phase(&d).is_err());
    }

    #[test]
    fn calibration_linear_in_target() {
        let atom = rb87();
        let grid = VelocityGrid::new(&atom, 338.15, 4.5, 801).unwrap();
        let probe = ProbeSettings::natural(&atom);
        let mut cell = CellConfig::default();
        let c1 = calibrate_od_scale(&cell, &atom, &grid, &probe).unwrap();
        cell.target_od *= 2.0;
        let c2 = calibrate_od_scale(&cell, &atom, &grid, &probe).unwrap();
        assert!((c2 / c1 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn empty_upper_level_absorbs_nothing() {
        let atom = rb87();
        let grid = VelocityGrid::new(&atom, 338.15, 4.5, 801).unwrap();
        let probe = ProbeSettings::natural(&atom);
        let scale = calibrate_od_scale(&CellConfig::default(), &atom, &grid, &probe).unwrap();
        let pop = PopulationField::thermal(&grid, &atom).unwrap().concentrated(|s| s.f == 1);
        let d: Vec<f64> = (-150..=250).map(|i| i as f64 * 10.0).collect();
        let a = absorption_coefficients(&pop, &atom, scale, &probe, &d, None).unwrap();
        assert!(a.alpha_r.iter().chain(&a.alpha_l).all(|&x| x == 0.0));
    }

    #[test]
    fn decreasing_grid_rejected() {
        let atom = rb87();
        let grid = VelocityGrid::new(&atom, 338.15, 4.5, 101).unwrap();
        let pop = PopulationField::thermal(&grid, &atom).unwrap();
        let probe = ProbeSettings::natural(&atom);
        assert!(absorption_coefficients(&pop, &atom, 1.0, &probe, &[1.0, 0.0], None).is_err());
    }
}
