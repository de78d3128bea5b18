//! Steady-state ground-sublevel populations under a circularly polarized pump.
//!
//! The excited state is adiabatically eliminated: each velocity class obeys
//! a linear rate equation `dp/dt = M(v) p + γ_t (p_thermal - p)` over the
//! ground Zeeman sublevels, where `M` moves population from a pumped sublevel
//! through the excited hyperfine levels and back according to the spontaneous
//! branching ratios. The pump only drives the upper ground level
//! `F = I+1/2`, through both excited levels.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic_data::{transition_strengths, AtomSpec, HyperfineLine, VelocityGrid};
use crate::error::{Error, Result};

/// Circular polarization of the pump relative to the +z quantization axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub enum Polarization {
    #[default]
    SigmaPlus,
    SigmaMinus,
}

impl Polarization {
    /// Dipole component `q` driven by this polarization.
    pub fn q(self) -> i32 {
        match self {
            Polarization::SigmaPlus => 1,
            Polarization::SigmaMinus => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarization::SigmaPlus => Polarization::SigmaMinus,
            Polarization::SigmaMinus => Polarization::SigmaPlus,
        }
    }
}

impl TryFrom<i32> for Polarization {
    type Error = String;

    fn try_from(v: i32) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Polarization::SigmaPlus),
            -1 => Ok(Polarization::SigmaMinus),
            _ => Err(format!("polarization must be +1 or -1, got {v}")),
        }
    }
}

impl From<Polarization> for i32 {
    fn from(p: Polarization) -> i32 {
        p.q()
    }
}

/// The hyperfine line that defines the pump's zero detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetLine {
    pub ground_f: i32,
    pub excited_f: i32,
}

impl Default for TargetLine {
    fn default() -> Self {
        TargetLine {
            ground_f: 2,
            excited_f: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    /// Offset from the zero-velocity `F=2 -> F'=1` resonance, MHz.
    pub detuning_mhz: f64,
    /// `I / I_sat` at beam center.
    pub saturation_parameter: f64,
    #[serde(default)]
    pub polarization: Polarization,
    #[serde(default)]
    pub target_line: TargetLine,
}

impl PumpConfig {
    /// σ⁺ pump on the default target line.
    pub fn new(detuning_mhz: f64, saturation_parameter: f64) -> Self {
        Self {
            detuning_mhz,
            saturation_parameter,
            polarization: Polarization::SigmaPlus,
            target_line: TargetLine::default(),
        }
    }

    pub fn validate(&self, atom: &AtomSpec) -> Result<()> {
        if !(self.saturation_parameter >= 0.0 && self.saturation_parameter.is_finite()) {
            return Err(Error::config(format!(
                "pump: field `saturation_parameter` must be >= 0, got {}",
                self.saturation_parameter
            )));
        }
        if !self.detuning_mhz.is_finite() {
            return Err(Error::config("pump: field `detuning_mhz` must be finite"));
        }
        let (lower, upper) = atom.ground_levels();
        if self.target_line.ground_f != upper || self.target_line.excited_f != lower {
            return Err(Error::config(format!(
                "pump: field `target_line` must be F={upper} -> F'={lower} for {}, got F={} -> F'={}",
                atom.label, self.target_line.ground_f, self.target_line.excited_f
            )));
        }
        Ok(())
    }

    /// Power-broadened homogeneous width Γ√(1+s) in MHz.
    pub fn broadened_width(&self, atom: &AtomSpec) -> f64 {
        atom.natural_linewidth * (1.0 + self.saturation_parameter).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationConfig {
    /// Ground-state repolarization rate γ_t toward the thermal state, s⁻¹.
    pub transit_rate_per_s: f64,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        // 30 µs mean crossing time
        RelaxationConfig {
            transit_rate_per_s: 1.0 / 30e-6,
        }
    }
}

impl RelaxationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.transit_rate_per_s > 0.0 && self.transit_rate_per_s.is_finite()) {
            return Err(Error::config(format!(
                "relaxation: field `transit_rate_per_s` must be > 0, got {}",
                self.transit_rate_per_s
            )));
        }
        Ok(())
    }
}

/// A ground Zeeman sublevel `|F, m_F>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sublevel {
    pub f: i32,
    pub m: i32,
}

/// Unit-peak Lorentzian of full width `fwhm` evaluated at `detuning`.
pub fn lorentzian(detuning: f64, fwhm: f64) -> f64 {
    let x = 2.0 * detuning / fwhm;
    1.0 / (1.0 + x * x)
}

/// Precomputed line strengths and decay branching for one isotope.
#[derive(Debug, Clone)]
pub struct PumpingScheme {
    atom: AtomSpec,
    sublevels: Vec<Sublevel>,
    /// Lines from the upper ground level to each excited level, with offsets.
    pump_lines: Vec<HyperfineLine>,
    /// `branching[line][m_e + F'][g]`: probability that excited `|F', m_e>`
    /// decays into ground sublevel `g`.
    branching: Vec<Vec<Vec<f64>>>,
}

impl PumpingScheme {
    pub fn new(atom: &AtomSpec) -> Result<Self> {
        let (g_lo, g_hi) = atom.ground_levels();
        let (e_lo, e_hi) = atom.excited_levels();
        let sublevels: Vec<Sublevel> = [g_lo, g_hi]
            .into_iter()
            .flat_map(|f| (-f..=f).map(move |m| Sublevel { f, m }))
            .collect();

        let mut pump_lines = Vec::new();
        let mut branching = Vec::new();
        for (fe, offset) in [(e_lo, 0.0), (e_hi, atom.excited_splitting)] {
            pump_lines.push(transition_strengths(atom, g_hi, fe)?.with_offset(offset));
            // Emission strengths share the absorption matrix elements.
            let to_lo = transition_strengths(atom, g_lo, fe)?;
            let to_hi = transition_strengths(atom, g_hi, fe)?;
            let mut per_me = Vec::new();
            for me in -fe..=fe {
                let mut row: Vec<f64> = sublevels
                    .iter()
                    .map(|s| {
                        let line = if s.f == g_lo { &to_lo } else { &to_hi };
                        line.strength(s.m, me - s.m)
                    })
                    .collect();
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|b| *b /= total);
                per_me.push(row);
            }
            branching.push(per_me);
        }

        Ok(Self {
            atom: atom.clone(),
            sublevels,
            pump_lines,
            branching,
        })
    }

    pub fn atom(&self) -> &AtomSpec {
        &self.atom
    }

    pub fn sublevels(&self) -> &[Sublevel] {
        &self.sublevels
    }

    pub fn pump_lines(&self) -> &[HyperfineLine] {
        &self.pump_lines
    }

    pub fn index_of(&self, f: i32, m: i32) -> Option<usize> {
        self.sublevels.iter().position(|s| s.f == f && s.m == m)
    }

    /// Decay probability from excited `|F', m_e>` (line index `line`) to ground `g`.
    pub fn branching(&self, line: usize, me: i32, g: usize) -> f64 {
        let fe = self.pump_lines[line].excited_f;
        if me.abs() > fe {
            return 0.0;
        }
        self.branching[line][(me + fe) as usize][g]
    }

    /// The sublevel-uniform thermal distribution.
    pub fn thermal(&self) -> Vec<f64> {
        let n = self.sublevels.len();
        vec![1.0 / n as f64; n]
    }

    /// Transfer-rate generator `M(v)`: `M[(g', g)]` is the rate from `g` to `g'`
    /// for `g' != g`, and each column sums to zero.
    pub fn rate_matrix(&self, v: f64, pump: &PumpConfig) -> DMatrix<f64> {
        let n = self.sublevels.len();
        let mut m = DMatrix::zeros(n, n);
        let q = pump.polarization.q();
        for (li, line) in self.pump_lines.iter().enumerate() {
            let rates = excitation_rate(v, pump, line, &self.atom);
            for (mi, mg) in line.ground_ms().enumerate() {
                let rate = rates[mi];
                if rate == 0.0 {
                    continue;
                }
                let g = self.index_of(line.ground_f, mg).expect("pumped sublevel exists");
                let me = mg + q;
                for gp in 0..n {
                    if gp == g {
                        continue;
                    }
                    let flow = rate * self.branching(li, me, gp);
                    m[(gp, g)] += flow;
                    m[(g, g)] -= flow;
                }
            }
        }
        m
    }

    /// Steady-state populations of one velocity class.
    pub fn steady_state_at(&self, v: f64, pump: &PumpConfig, relax: &RelaxationConfig) -> Result<Vec<f64>> {
        let gamma_t = relax.transit_rate_per_s;
        let n = self.sublevels.len();
        let mut a = self.rate_matrix(v, pump);
        for i in 0..n {
            a[(i, i)] -= gamma_t;
        }
        let b = DVector::from_iterator(n, self.thermal().into_iter().map(|p| -gamma_t * p));
        let p = a.clone().lu().solve(&b).ok_or_else(|| {
            Error::numeric(
                "pumping",
                format!("singular rate system at v = {v} m/s (γ_t = {gamma_t}): {a}"),
            )
        })?;
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::numeric(
                "pumping",
                format!("non-finite populations at v = {v} m/s"),
            ));
        }
        Ok(p.iter().copied().collect())
    }
}

/// Pump excitation rates (s⁻¹) out of each ground sublevel of `line`,
/// indexed by `m_F + F`.
///
/// An atom moving at `+v` along the pump direction sees detuning
/// `Δ_p - k v - offset`; the response is a unit-peak Lorentzian of width Γ√(1+s).
pub fn excitation_rate(v: f64, pump: &PumpConfig, line: &HyperfineLine, atom: &AtomSpec) -> Vec<f64> {
    let s = pump.saturation_parameter;
    let width = pump.broadened_width(atom);
    let detuning = pump.detuning_mhz - atom.wavevector_mhz_per_mps() * v - line.detuning_offset;
    let profile = lorentzian(detuning, width);
    let q = pump.polarization.q();
    line.ground_ms()
        .map(|m| 0.5 * atom.gamma_rate() * s * line.strength(m, q) * profile)
        .collect()
}

/// Ground-sublevel fractions for every velocity class of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationField {
    grid: VelocityGrid,
    sublevels: Vec<Sublevel>,
    fractions: Vec<f64>,
}

impl PopulationField {
    pub fn new(grid: VelocityGrid, sublevels: Vec<Sublevel>, fractions: Vec<f64>) -> Result<Self> {
        if fractions.len() != grid.len() * sublevels.len() {
            return Err(Error::invalid(format!(
                "population table has {} entries, expected {} x {}",
                fractions.len(),
                grid.len(),
                sublevels.len()
            )));
        }
        Ok(Self {
            grid,
            sublevels,
            fractions,
        })
    }

    /// Thermal (unpumped) populations on `grid`.
    pub fn thermal(grid: &VelocityGrid, atom: &AtomSpec) -> Result<Self> {
        let scheme = PumpingScheme::new(atom)?;
        let row = scheme.thermal();
        let fractions = row.iter().copied().cycle().take(row.len() * grid.len()).collect();
        Self::new(grid.clone(), scheme.sublevels.clone(), fractions)
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn sublevels(&self) -> &[Sublevel] {
        &self.sublevels
    }

    /// Populations of velocity class `i`, ordered like [`Self::sublevels`].
    pub fn class(&self, i: usize) -> &[f64] {
        let n = self.sublevels.len();
        &self.fractions[i * n..(i + 1) * n]
    }

    pub fn fraction(&self, i: usize, f: i32, m: i32) -> f64 {
        self.sublevels
            .iter()
            .position(|s| s.f == f && s.m == m)
            .map_or(0.0, |k| self.class(i)[k])
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    /// Moves every class's population into the sublevels selected by `keep`,
    /// spread uniformly. Used to build reference distributions.
    pub fn concentrated(&self, keep: impl Fn(Sublevel) -> bool) -> Self {
        let mask: Vec<bool> = self.sublevels.iter().map(|&s| keep(s)).collect();
        let count = mask.iter().filter(|&&k| k).count().max(1);
        let row: Vec<f64> = mask
            .iter()
            .map(|&k| if k { 1.0 / count as f64 } else { 0.0 })
            .collect();
        let fractions = row.iter().copied().cycle().take(self.fractions.len()).collect();
        Self {
            grid: self.grid.clone(),
            sublevels: self.sublevels.clone(),
            fractions,
        }
    }
}

/// Solves the per-class steady state over the whole velocity grid.
///
/// Classes are independent and solved in parallel; the result is assembled
/// in grid order and does not depend on the thread count.
pub fn steady_state_populations(
    grid: &VelocityGrid,
    pump: &PumpConfig,
    relax: &RelaxationConfig,
    atom: &AtomSpec,
) -> Result<PopulationField> {
    pump.validate(atom)?;
    relax.validate()?;
    let scheme = PumpingScheme::new(atom)?;
    let rows = grid
        .points()
        .par_iter()
        .map(|&v| scheme.steady_state_at(v, pump, relax))
        .collect::<Result<Vec<_>>>()?;
    PopulationField::new(grid.clone(), scheme.sublevels.clone(), rows.concat())
}
