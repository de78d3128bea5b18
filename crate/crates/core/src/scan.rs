//! Full filter simulations: transmission spectra, pump-tuning sweeps,
//! linewidth and extinction metrics, and the calibration of the pump
//! saturation parameter against a target linewidth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic_data::{doppler_fwhm, AtomSpec, VelocityGrid};
use crate::dichroism::{
    absorption_coefficients, calibrate_od_scale, BackgroundAbsorber, CellConfig, DichroicAbsorption,
    ProbeSettings,
};
use crate::error::{Error, Result};
use crate::fitting::{fit_gaussian_sum2, fit_lorentzian, FitResult};
use crate::polarization_optics::{filter_outputs, InterferometerConfig};
use crate::pumping::{steady_state_populations, PopulationField, PumpConfig, RelaxationConfig};

/// Piecewise probe-detuning grid: a fine pitch near every line and every
/// pumped velocity-class feature, a coarse pitch elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeGridSpec {
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub fine_step_mhz: f64,
    pub coarse_step_mhz: f64,
    /// Half width of each fine region, MHz.
    pub fine_half_width_mhz: f64,
}

impl Default for ProbeGridSpec {
    fn default() -> Self {
        Self {
            start_mhz: -4000.0,
            stop_mhz: 4500.0,
            fine_step_mhz: 2.0,
            coarse_step_mhz: 20.0,
            fine_half_width_mhz: 300.0,
        }
    }
}

impl ProbeGridSpec {
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, why: String| Error::config(format!("probe.grid: field `{name}` {why}"));
        if !(self.start_mhz.is_finite() && self.stop_mhz.is_finite() && self.stop_mhz > self.start_mhz) {
            return Err(field(
                "stop_mhz",
                format!("must exceed `start_mhz`, got [{}, {}]", self.start_mhz, self.stop_mhz),
            ));
        }
        for (name, v) in [
            ("fine_step_mhz", self.fine_step_mhz),
            ("coarse_step_mhz", self.coarse_step_mhz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(field(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.fine_half_width_mhz >= 0.0 && self.fine_half_width_mhz.is_finite()) {
            return Err(field(
                "fine_half_width_mhz",
                format!("must be >= 0, got {}", self.fine_half_width_mhz),
            ));
        }
        let points = (self.stop_mhz - self.start_mhz) / self.fine_step_mhz.min(self.coarse_step_mhz);
        if points > 2.0e6 {
            return Err(field("fine_step_mhz", format!("gives about {points:.0} points; too many")));
        }
        Ok(())
    }

    /// A uniform grid (fine and coarse pitch equal).
    pub fn uniform(start_mhz: f64, stop_mhz: f64, step_mhz: f64) -> Self {
        Self {
            start_mhz,
            stop_mhz,
            fine_step_mhz: step_mhz,
            coarse_step_mhz: step_mhz,
            fine_half_width_mhz: 0.0,
        }
    }

    /// Grid points with fine regions centered on `centers`.
    pub fn build(&self, centers: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        let (lo, hi) = (self.start_mhz, self.stop_mhz);
        let mut regions: Vec<(f64, f64)> = centers
            .iter()
            .map(|&c| ((c - self.fine_half_width_mhz).max(lo), (c + self.fine_half_width_mhz).min(hi)))
            .filter(|(a, b)| b > a)
            .collect();
        regions.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (a, b) in regions {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        let inside = |x: f64| merged.iter().any(|&(a, b)| x >= a && x <= b);

        // Both lattices share the origin `start`, so they coincide wherever
        // the pitches are commensurate.
        let lattice = |step: f64, from: f64, to: f64| {
            let first = ((from - lo) / step - 1e-9).ceil() as i64;
            let last = ((to - lo) / step + 1e-9).floor() as i64;
            (first..=last).map(move |j| lo + j as f64 * step)
        };
        let mut pts: Vec<f64> = lattice(self.coarse_step_mhz, lo, hi).filter(|&x| !inside(x)).collect();
        for &(a, b) in &merged {
            pts.extend(lattice(self.fine_step_mhz, a, b));
        }
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        let tol = 1e-6 * self.fine_step_mhz.min(self.coarse_step_mhz);
        pts.dedup_by(|b, a| (*b - *a).abs() <= tol);
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityGridSpec {
    pub half_width_sigmas: f64,
    pub points: usize,
}

impl Default for VelocityGridSpec {
    fn default() -> Self {
        Self {
            half_width_sigmas: 4.5,
            points: 2001,
        }
    }
}

/// Every physical and numerical input of one simulation, validated and
/// with reference data resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub atom: AtomSpec,
    /// Thermal second isotope sharing the beam path, if enabled.
    pub background: Option<AtomSpec>,
    pub cell: CellConfig,
    pub pump: PumpConfig,
    pub relaxation: RelaxationConfig,
    pub interferometer: InterferometerConfig,
    pub probe: ProbeSettings,
    pub probe_grid: ProbeGridSpec,
    pub velocity_grid: VelocityGridSpec,
}

impl SimulationConfig {
    /// Defaults for `atom` with the given pump.
    pub fn new(atom: AtomSpec, pump: PumpConfig) -> Self {
        Self {
            probe: ProbeSettings::natural(&atom),
            atom,
            background: None,
            cell: CellConfig::default(),
            pump,
            relaxation: RelaxationConfig::default(),
            interferometer: InterferometerConfig::default(),
            probe_grid: ProbeGridSpec::default(),
            velocity_grid: VelocityGridSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        if self.cell.include_85rb != self.background.is_some() {
            return Err(Error::config(
                "cell: field `include_85rb` is set but no background isotope was resolved",
            ));
        }
        self.pump.validate(&self.atom)?;
        self.relaxation.validate()?;
        self.interferometer.validate()?;
        self.probe_grid.validate()?;
        let w = self.probe.homogeneous_width_mhz;
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::config(format!(
                "probe: field `homogeneous_width_mhz` must be > 0, got {w}"
            )));
        }
        let vg = self.velocity_grid;
        if !(vg.half_width_sigmas >= 4.0 && vg.half_width_sigmas.is_finite()) {
            return Err(Error::config(format!(
                "velocity_grid: field `half_width_sigmas` must be >= 4, got {}",
                vg.half_width_sigmas
            )));
        }
        if vg.points < 3 || vg.points % 2 == 0 {
            return Err(Error::config(format!(
                "velocity_grid: field `points` must be odd and >= 3, got {}",
                vg.points
            )));
        }
        Ok(())
    }

    pub fn with_pump_detuning(&self, detuning_mhz: f64) -> Self {
        let mut c = self.clone();
        c.pump.detuning_mhz = detuning_mhz;
        c
    }

    pub fn with_saturation(&self, s: f64) -> Self {
        let mut c = self.clone();
        c.pump.saturation_parameter = s;
        c
    }

    /// Probe detunings where sub-Doppler structure is expected: the two
    /// line centers and the probe images of both pumped velocity classes.
    pub fn feature_centers(&self) -> Vec<f64> {
        let o = self.atom.line_offset;
        let e = self.atom.excited_splitting;
        let dp = self.pump.detuning_mhz;
        vec![o, o + e, o - dp, o + e - dp, o + 2.0 * e - dp]
    }

    pub fn probe_detunings(&self) -> Result<Vec<f64>> {
        self.probe_grid.build(&self.feature_centers())
    }
}

/// Output-port transmissions on a probe grid, in units of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpectrum {
    pub detunings: Vec<f64>,
    pub t_v: Vec<f64>,
    pub t_h: Vec<f64>,
}

impl FilterSpectrum {
    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// Largest V-port transmission.
    pub fn peak_transmission(&self) -> f64 {
        self.t_v.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest V-port transmission on the grid.
    pub fn floor(&self) -> f64 {
        self.t_v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Threshold a local maximum must exceed to count as a transmission peak.
    pub fn peak_threshold(&self) -> f64 {
        (10.0 * self.floor()).max(1e-12)
    }
}

/// Everything computed on the way to a spectrum.
#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub spectrum: FilterSpectrum,
    pub absorption: DichroicAbsorption,
    pub populations: PopulationField,
    pub od_scale: f64,
}

fn in_stage(stage: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::InvalidArgument(m) => Error::numeric(stage, m),
        Error::Numeric { stage: inner, message } if inner != stage => {
            Error::numeric(stage, format!("{inner}: {message}"))
        }
        other => other,
    }
}

pub fn velocity_grid(cfg: &SimulationConfig) -> Result<VelocityGrid> {
    VelocityGrid::new(
        &cfg.atom,
        cfg.cell.temperature_k,
        cfg.velocity_grid.half_width_sigmas,
        cfg.velocity_grid.points,
    )
    .map_err(|e| match e {
        Error::InvalidArgument(m) => Error::config(format!("velocity_grid: {m}")),
        other => other,
    })
}

/// Runs populations → circular absorption → interferometer on the
/// configured probe grid.
pub fn simulate(cfg: &SimulationConfig) -> Result<SpectrumRun> {
    let detunings = cfg.probe_detunings()?;
    simulate_on(cfg, &detunings)
}

/// As [`simulate`] on caller-supplied probe detunings.
pub fn simulate_on(cfg: &SimulationConfig, detunings: &[f64]) -> Result<SpectrumRun> {
    cfg.validate()?;
    let grid = velocity_grid(cfg)?;
    let od_scale = calibrate_od_scale(&cfg.cell, &cfg.atom, &grid, &cfg.probe)?;
    let populations = steady_state_populations(&grid, &cfg.pump, &cfg.relaxation, &cfg.atom)
        .map_err(in_stage("pumping"))?;
    let background = cfg
        .background
        .as_ref()
        .map(|bg| BackgroundAbsorber::new(bg, &cfg.atom, cfg.cell.temperature_k, cfg.velocity_grid.points))
        .transpose()?;
    let absorption = absorption_coefficients(
        &populations,
        &cfg.atom,
        od_scale,
        &cfg.probe,
        detunings,
        background.as_ref(),
    )
    .map_err(in_stage("dichroism"))?;
    let ports = absorption
        .alpha_r
        .iter()
        .zip(&absorption.alpha_l)
        .map(|(&r, &l)| filter_outputs(r, l, &cfg.interferometer))
        .collect::<Result<Vec<_>>>()
        .map_err(in_stage("interferometer"))?;
    let spectrum = FilterSpectrum {
        detunings: detunings.to_vec(),
        t_v: ports.iter().map(|p| p.v).collect(),
        t_h: ports.iter().map(|p| p.h).collect(),
    };
    if spectrum.t_v.iter().chain(&spectrum.t_h).any(|t| !t.is_finite()) {
        return Err(Error::numeric("interferometer", "non-finite transmission"));
    }
    Ok(SpectrumRun {
        spectrum,
        absorption,
        populations,
        od_scale,
    })
}

pub fn simulate_spectrum(cfg: &SimulationConfig) -> Result<FilterSpectrum> {
    simulate(cfg).map(|r| r.spectrum)
}

/// Indices of local maxima of `t_v` above [`FilterSpectrum::peak_threshold`],
/// in order of increasing detuning.
pub fn find_peaks(spec: &FilterSpectrum) -> Vec<usize> {
    let t = &spec.t_v;
    let threshold = spec.peak_threshold();
    (0..t.len())
        .filter(|&i| t[i] > threshold)
        .filter(|&i| (i == 0 || t[i] > t[i - 1]) && (i + 1 == t.len() || t[i] >= t[i + 1]))
        .collect()
}

/// The highest transmission peak, if any clears the threshold.
pub fn highest_peak(spec: &FilterSpectrum) -> Option<usize> {
    find_peaks(spec)
        .into_iter()
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if spec.t_v[b] >= spec.t_v[i] => Some(b),
            _ => Some(i),
        })
}

/// A Lorentzian fitted to one transmission peak.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakFit {
    /// Grid index of the peak maximum.
    pub index: usize,
    /// Transmission at the grid maximum.
    pub height: f64,
    pub center: f64,
    pub fwhm: f64,
    pub fit: FitResult,
}

/// Full width at half maximum above the floor, read off the grid.
fn half_max_width(spec: &FilterSpectrum, idx: usize) -> Option<f64> {
    let (x, t) = (&spec.detunings, &spec.t_v);
    let base = spec.floor();
    let level = base + 0.5 * (t[idx] - base);
    let interp = |i: usize, j: usize| x[i] + (level - t[i]) / (t[j] - t[i]) * (x[j] - x[i]);
    let left = (0..idx).rev().find(|&i| t[i] < level).map(|i| interp(i, i + 1));
    let right = (idx + 1..t.len()).find(|&i| t[i] < level).map(|i| interp(i - 1, i));
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        (Some(l), None) => Some(2.0 * (x[idx] - l)),
        (None, Some(r)) => Some(2.0 * (r - x[idx])),
        (None, None) => None,
    }
}

/// Fits a Lorentzian to the peak at grid index `idx` over ±1.5 half-max
/// widths.
pub fn fit_peak(spec: &FilterSpectrum, idx: usize) -> Result<PeakFit> {
    if idx >= spec.len() {
        return Err(Error::invalid(format!("peak index {idx} outside the spectrum")));
    }
    let width = half_max_width(spec, idx)
        .ok_or_else(|| Error::numeric("fitting", "peak has no half-maximum crossing on the grid"))?;
    let c = spec.detunings[idx];
    let (lo, hi) = (c - 1.5 * width, c + 1.5 * width);
    let (xs, ys): (Vec<f64>, Vec<f64>) = spec
        .detunings
        .iter()
        .zip(&spec.t_v)
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .map(|(x, y)| (*x, *y))
        .unzip();
    let fit = fit_lorentzian(&xs, &ys).map_err(in_stage("fitting"))?;
    if !fit.converged || !(fit.params[1] > 0.0) {
        return Err(Error::numeric(
            "fitting",
            format!(
                "Lorentzian fit near {c} MHz did not converge: {} iterations, gradient {:.3e}, residual rms {:.3e}, params {:?}",
                fit.iterations, fit.gradient_norm, fit.residual_rms, fit.params
            ),
        ));
    }
    Ok(PeakFit {
        index: idx,
        height: spec.t_v[idx],
        center: fit.params[0],
        fwhm: fit.params[1],
        fit,
    })
}

/// Fitted FWHM of the `which_peak`-th peak (in order of detuning).
pub fn measure_linewidth(spec: &FilterSpectrum, which_peak: usize) -> Result<f64> {
    let peaks = find_peaks(spec);
    let idx = *peaks.get(which_peak).ok_or_else(|| {
        Error::invalid(format!(
            "peak {which_peak} requested but only {} resolved above the floor",
            peaks.len()
        ))
    })?;
    fit_peak(spec, idx).map(|p| p.fwhm)
}

/// Value reported when the out-of-band transmission is exactly zero.
pub const EXTINCTION_CAP_DB: f64 = 99.0;

/// Ratio of the peak transmission to the largest V-port transmission inside
/// the `out_of_band` intervals, in dB, capped at [`EXTINCTION_CAP_DB`].
pub fn extinction_db(spec: &FilterSpectrum, out_of_band: &[(f64, f64)]) -> Result<f64> {
    let band: Vec<f64> = spec
        .detunings
        .iter()
        .zip(&spec.t_v)
        .filter(|(x, _)| out_of_band.iter().any(|&(a, b)| **x >= a && **x <= b))
        .map(|(_, t)| *t)
        .collect();
    if band.is_empty() {
        return Err(Error::invalid(format!(
            "no grid points inside the out-of-band intervals {out_of_band:?}"
        )));
    }
    let leak = band.iter().copied().fold(0.0, f64::max);
    let peak = spec.peak_transmission();
    if leak <= 0.0 {
        return Ok(EXTINCTION_CAP_DB);
    }
    Ok((10.0 * (peak / leak).log10()).min(EXTINCTION_CAP_DB))
}

/// Least-squares line `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("a line fit needs at least two (x, y) pairs"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("all x values coincide"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunabilityResult {
    pub pump_detunings: Vec<f64>,
    /// Fitted center of the highest peak; NaN where unresolved.
    pub peak_centers: Vec<f64>,
    pub peak_transmissions: Vec<f64>,
    /// Why an entry has no center, if it has none.
    pub flags: Vec<Option<String>>,
}

impl TunabilityResult {
    pub fn resolved(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.pump_detunings.len())
            .filter(|&i| self.flags[i].is_none())
            .map(|i| (self.pump_detunings[i], self.peak_centers[i], self.peak_transmissions[i]))
    }

    /// Line fit of center against pump detuning over resolved entries with
    /// `|Δp| <= max_abs_detuning`.
    pub fn center_slope(&self, max_abs_detuning: f64) -> Result<(f64, f64)> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .resolved()
            .filter(|(d, _, _)| d.abs() <= max_abs_detuning)
            .map(|(d, c, _)| (d, c))
            .unzip();
        linear_fit(&xs, &ys)
    }

    /// Two-Gaussian fit of peak transmission against pump detuning; the
    /// second component starts `splitting` above the first.
    pub fn envelope_fit(&self, splitting: f64) -> Result<FitResult> {
        fit_gaussian_sum2(&self.pump_detunings, &self.peak_transmissions, Some(splitting))
    }
}

/// Largest accepted |pump detuning| in units of the Doppler FWHM.
pub const MAX_PUMP_DETUNING_FWHM: f64 = 1.2;

/// Simulates one spectrum per pump detuning and records the highest
/// transmission peak of each. Entries run in parallel and are returned in
/// input order.
pub fn tunability_scan(pump_detunings: &[f64], cfg: &SimulationConfig) -> Result<TunabilityResult> {
    cfg.validate()?;
    let limit = MAX_PUMP_DETUNING_FWHM * doppler_fwhm(&cfg.atom, cfg.cell.temperature_k)?;
    if let Some(d) = pump_detunings.iter().find(|d| !(d.abs() <= limit)) {
        return Err(Error::invalid(format!(
            "pump detuning {d} MHz lies outside ±{limit:.1} MHz (1.2 Doppler widths)"
        )));
    }
    let rows = pump_detunings
        .par_iter()
        .map(|&dp| {
            let spec = simulate_spectrum(&cfg.with_pump_detuning(dp))?;
            let floor = spec.floor();
            let Some(idx) = highest_peak(&spec) else {
                return Ok((f64::NAN, spec.peak_transmission(), Some("no peak above the floor".to_string())));
            };
            let height = spec.t_v[idx];
            if height < 3.0 * floor {
                return Ok((f64::NAN, height, Some("peak below three times the floor".to_string())));
            }
            Ok(match fit_peak(&spec, idx) {
                Ok(p) => (p.center, height, None),
                Err(e) => (f64::NAN, height, Some(e.to_string())),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TunabilityResult {
        pump_detunings: pump_detunings.to_vec(),
        peak_centers: rows.iter().map(|r| r.0).collect(),
        peak_transmissions: rows.iter().map(|r| r.1).collect(),
        flags: rows.into_iter().map(|r| r.2).collect(),
    })
}

/// Pump detunings `start, start+step, …` up to and including `stop`.
pub fn detuning_sweep(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite() && stop >= start) {
        return Err(Error::config(format!(
            "sweep: need finite start <= stop and step > 0, got {start}..{stop} step {step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// What the linewidth calibration aims for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTargets {
    pub target_fwhm_mhz: f64,
    pub tolerance_mhz: f64,
    pub s_min: f64,
    pub s_max: f64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self {
            target_fwhm_mhz: 80.0,
            tolerance_mhz: 1.0,
            s_min: 1.0,
            s_max: 1e4,
        }
    }
}

impl CalibrationTargets {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_fwhm_mhz > 0.0 && self.target_fwhm_mhz.is_finite()) {
            return Err(Error::config("calibration: field `target_fwhm_mhz` must be > 0"));
        }
        if !(self.tolerance_mhz > 0.0 && self.tolerance_mhz.is_finite()) {
            return Err(Error::config("calibration: field `tolerance_mhz` must be > 0"));
        }
        if !(self.s_min > 0.0 && self.s_max > self.s_min && self.s_max.is_finite()) {
            return Err(Error::config(
                "calibration: fields `s_min`, `s_max` must satisfy 0 < s_min < s_max",
            ));
        }
        Ok(())
    }
}

/// Measured values of the reference experiment, compared against the
/// simulation in calibration reports.
pub mod reference {
    pub const OPTICAL_DEPTH: f64 = 1.1;
    pub const FWHM_MHZ: f64 = 80.0;
    pub const ALPHA_R: f64 = 5.0;
    pub const ALPHA_L: f64 = 0.3;
    pub const PEAK_TRANSMISSION: f64 = 0.146;
    pub const EXTINCTION_DB: f64 = 35.0;
}

/// Headline numbers of one simulated spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumMetrics {
    pub od_scale: f64,
    /// Thermal α at the `F=2 -> F'=1` Doppler peak.
    pub od_unpumped: f64,
    pub peak_transmission: f64,
    pub floor: f64,
    pub dichroic_feature: bool,
    pub peak_centers_mhz: Vec<f64>,
    pub peak_heights: Vec<f64>,
    /// Fitted center and FWHM of the peak produced by the velocity class
    /// pumped on `F'=1`, probed on `F'=1`.
    pub feature_center_mhz: Option<f64>,
    pub feature_fwhm_mhz: Option<f64>,
    /// α_R and α_L at that feature.
    pub alpha_r: f64,
    pub alpha_l: f64,
    /// Extinction against |δ - line offset| > 3 GHz, dB.
    pub extinction_db: Option<f64>,
    pub flags: Vec<String>,
}

/// Flag raised when no transmission peak clears the floor threshold.
pub const NO_FEATURE_FLAG: &str = "no dichroic feature";

/// Peak index nearest to the main pumped feature `line_offset - Δp`,
/// within 100 MHz of it.
fn main_feature(spec: &FilterSpectrum, cfg: &SimulationConfig) -> Option<usize> {
    let target = cfg.atom.line_offset - cfg.pump.detuning_mhz;
    find_peaks(spec)
        .into_iter()
        .filter(|&i| (spec.detunings[i] - target).abs() <= 100.0)
        .min_by(|&a, &b| {
            (spec.detunings[a] - target)
                .abs()
                .total_cmp(&(spec.detunings[b] - target).abs())
        })
}

/// Out-of-band intervals more than 3 GHz from the `F'=1` line.
pub fn far_bands(cfg: &SimulationConfig) -> [(f64, f64); 2] {
    let o = cfg.atom.line_offset;
    [(f64::NEG_INFINITY, o - 3000.0), (o + 3000.0, f64::INFINITY)]
}

pub fn spectrum_metrics(cfg: &SimulationConfig, run: &SpectrumRun) -> Result<SpectrumMetrics> {
    let spec = &run.spectrum;
    let peaks = find_peaks(spec);
    let mut flags = Vec::new();
    if peaks.is_empty() {
        flags.push(NO_FEATURE_FLAG.to_string());
    }
    let feature = match main_feature(spec, cfg).map(|i| fit_peak(spec, i)) {
        Some(Ok(f)) => Some(f),
        Some(Err(e)) => {
            flags.push(format!("feature fit failed: {e}"));
            None
        }
        None => None,
    };
    let probe_at = feature
        .as_ref()
        .map(|f| f.center)
        .unwrap_or(cfg.atom.line_offset - cfg.pump.detuning_mhz);
    let alpha = absorption_coefficients(
        &run.populations,
        &cfg.atom,
        run.od_scale,
        &cfg.probe,
        &[probe_at],
        None,
    )?;
    let thermal = PopulationField::thermal(run.populations.grid(), &cfg.atom)?;
    let unpumped = absorption_coefficients(
        &thermal,
        &cfg.atom,
        run.od_scale,
        &cfg.probe,
        &[cfg.atom.line_offset],
        None,
    )?;
    let extinction = if peaks.is_empty() {
        None
    } else {
        extinction_db(spec, &far_bands(cfg)).ok()
    };
    Ok(SpectrumMetrics {
        od_scale: run.od_scale,
        od_unpumped: unpumped.alpha_r[0],
        peak_transmission: spec.peak_transmission(),
        floor: spec.floor(),
        dichroic_feature: !peaks.is_empty(),
        peak_centers_mhz: peaks.iter().map(|&i| spec.detunings[i]).collect(),
        peak_heights: peaks.iter().map(|&i| spec.t_v[i]).collect(),
        feature_center_mhz: feature.as_ref().map(|f| f.center),
        feature_fwhm_mhz: feature.as_ref().map(|f| f.fwhm),
        alpha_r: alpha.alpha_r[0],
        alpha_l: alpha.alpha_l[0],
        extinction_db: extinction,
        flags,
    })
}

/// One evaluation of the linewidth during calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationStep {
    pub saturation_parameter: f64,
    pub fwhm_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub saturation_parameter: f64,
    pub target_fwhm_mhz: f64,
    pub metrics: SpectrumMetrics,
    pub trace: Vec<CalibrationStep>,
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub config: SimulationConfig,
    pub report: CalibrationReport,
}

/// Fitted FWHM of the main feature, if one is resolved.
fn feature_width(cfg: &SimulationConfig) -> Result<Option<f64>> {
    let spec = simulate_spectrum(cfg)?;
    Ok(main_feature(&spec, cfg).and_then(|i| fit_peak(&spec, i).ok()).map(|p| p.fwhm))
}

/// Chooses the pump saturation parameter so that the main transmission
/// feature has the target FWHM.
///
/// The OD scale is exact by construction. The linewidth is bracketed by
/// doubling `s` from `s_min`, then the bracket is bisected in `log s`.
/// The starting `s` of `cfg` is ignored, so the procedure is idempotent.
pub fn calibrate_to_reference(cfg: &SimulationConfig, targets: &CalibrationTargets) -> Result<Calibration> {
    cfg.validate()?;
    targets.validate()?;
    let mut trace = Vec::new();
    let width_at = |s: f64, trace: &mut Vec<CalibrationStep>| -> Result<Option<f64>> {
        let w = feature_width(&cfg.with_saturation(s))?;
        trace.push(CalibrationStep {
            saturation_parameter: s,
            fwhm_mhz: w,
        });
        Ok(w)
    };
    let fail = |why: String, trace: &[CalibrationStep]| {
        let steps: Vec<String> = trace
            .iter()
            .map(|t| match t.fwhm_mhz {
                Some(w) => format!("s={:.4} fwhm={w:.3}", t.saturation_parameter),
                None => format!("s={:.4} no feature", t.saturation_parameter),
            })
            .collect();
        Error::Calibration(format!("{why}; trace: [{}]", steps.join(", ")))
    };
    let target = targets.target_fwhm_mhz;

    let mut lo = targets.s_min;
    match width_at(lo, &mut trace)? {
        Some(w) if w < target => {}
        Some(w) => {
            return Err(fail(
                format!("FWHM {w:.3} MHz at s = {lo} already exceeds the {target} MHz target"),
                &trace,
            ))
        }
        None => return Err(fail(format!("no resolvable feature at s = {lo}"), &trace)),
    }
    let mut hi = lo;
    loop {
        hi = (hi * 2.0).min(targets.s_max);
        match width_at(hi, &mut trace)? {
            Some(w) if w >= target => break,
            Some(_) => lo = hi,
            None => return Err(fail(format!("feature lost at s = {hi}"), &trace)),
        }
        if hi >= targets.s_max {
            return Err(fail(
                format!("target FWHM {target} MHz not bracketed in s ∈ [{}, {}]", targets.s_min, targets.s_max),
                &trace,
            ));
        }
    }

    let goal = 0.02 * targets.tolerance_mhz;
    let mut best = (f64::INFINITY, hi);
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        let w = width_at(mid, &mut trace)?.ok_or_else(|| fail(format!("feature lost at s = {mid}"), &trace))?;
        if (w - target).abs() < best.0 {
            best = ((w - target).abs(), mid);
        }
        if (w - target).abs() <= goal || hi / lo < 1.0 + 1e-12 {
            break;
        }
        if w < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (miss, s) = best;
    if miss > targets.tolerance_mhz {
        return Err(fail(
            format!("closest FWHM misses the target by {miss:.3} MHz"),
            &trace,
        ));
    }
    let config = cfg.with_saturation(s);
    let run = simulate(&config)?;
    let metrics = spectrum_metrics(&config, &run)?;
    Ok(Calibration {
        config,
        report: CalibrationReport {
            saturation_parameter: s,
            target_fwhm_mhz: target,
            metrics,
            trace,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum_from(xs: Vec<f64>, f: impl Fn(f64) -> f64) -> FilterSpectrum {
        FilterSpectrum {
            t_v: xs.iter().map(|&x| f(x)).collect(),
            t_h: vec![0.5; xs.len()],
            detunings: xs,
        }
    }

    fn lorentz(x: f64, c: f64, w: f64) -> f64 {
        1.0 / (1.0 + (2.0 * (x - c) / w).powi(2))
    }

    #[test]
    fn piecewise_grid() {
        let spec = ProbeGridSpec::default();
        let pts = spec.build(&[0.0, 814.5]).unwrap();
        assert_eq!(pts[0], -4000.0);
        assert_eq!(*pts.last().unwrap(), 4500.0);
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
        let fine = pts.iter().filter(|&&x| (-300.0..=300.0).contains(&x)).count();
        assert_eq!(fine, 301);
        assert!(pts.windows(2).all(|w| w[1] - w[0] <= 20.0 + 1e-9));
        // the coarse lattice resumes outside the fine regions
        assert!(pts.contains(&-320.0) && pts.contains(&1500.0));
    }

    #[test]
    fn uniform_grid() {
        let pts = ProbeGridSpec::uniform(-10.0, 10.0, 0.5).build(&[]).unwrap();
        assert_eq!(pts.len(), 41);
    }

    #[test]
    fn linewidth_of_exact_lorentzian() {
        let xs = ProbeGridSpec::default().build(&[0.0, 814.5]).unwrap();
        let spec = spectrum_from(xs, |x| 1e-5 + 0.146 * lorentz(x, 0.0, 80.0));
        let w = measure_linewidth(&spec, 0).unwrap();
        assert!((w - 80.0).abs() < 0.01, "{w}");
    }

    #[test]
    fn peaks_above_threshold() {
        let xs = ProbeGridSpec::uniform(-2000.0, 2000.0, 2.0).build(&[]).unwrap();
        let spec = spectrum_from(xs, |x| {
            1e-5 + 0.1 * lorentz(x, 0.0, 80.0) + 0.03 * lorentz(x, 814.0, 80.0)
        });
        let peaks = find_peaks(&spec);
        assert_eq!(peaks.len(), 2);
        assert_eq!(spec.detunings[peaks[1]], 814.0);
        assert_eq!(highest_peak(&spec), Some(peaks[0]));
    }

    #[test]
    fn extinction_sentinel_and_closed_form() {
        let xs = ProbeGridSpec::uniform(-4000.0, 4000.0, 10.0).build(&[]).unwrap();
        let dark = spectrum_from(xs.clone(), |x| if x.abs() < 100.0 { 0.1 } else { 0.0 });
        assert_eq!(extinction_db(&dark, &[(3000.0, 4000.0)]).unwrap(), EXTINCTION_CAP_DB);

        let floor = 0.95e-5;
        let spec = spectrum_from(xs, |x| floor + if x == 0.0 { 0.144 } else { 0.0 });
        let db = extinction_db(&spec, &[(3000.0, f64::INFINITY)]).unwrap();
        let expected = 10.0 * ((0.144 + floor) / floor).log10();
        assert!((db - expected).abs() < 1e-9, "{db}");
        assert!((db - 41.8).abs() < 0.1);
        assert!(extinction_db(&spec, &[(5000.0, 6000.0)]).is_err());
    }

    #[test]
    fn line_fit() {
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - x).collect();
        let (m, b) = linear_fit(&xs, &ys).unwrap();
        assert!((m + 1.0).abs() < 1e-15 && (b - 3.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_counts() {
        assert_eq!(detuning_sweep(-400.0, 400.0, 25.0).unwrap().len(), 33);
        assert!(detuning_sweep(0.0, 1.0, 0.0).is_err());
    }
}
