//! Jones-vector model of the polarization interferometer: an input polarizer
//! selecting H, a circularly dichroic medium, and a polarizing splitter with
//! H and V output ports.
//!
//! Circular basis convention: `ε_R = (ε_H - i ε_V)/√2`, `ε_L = (ε_H + i ε_V)/√2`,
//! so that `ε_H = (ε_R + ε_L)/√2`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Linear horizontal / vertical.
    HV,
    /// Right / left circular.
    RL,
}

/// A fully polarized field as two complex amplitudes in a declared basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    basis: Basis,
    amplitudes: [Complex64; 2],
}

impl PolarizationState {
    pub fn new(basis: Basis, a: Complex64, b: Complex64) -> Self {
        Self {
            basis,
            amplitudes: [a, b],
        }
    }

    pub fn horizontal() -> Self {
        Self::new(Basis::HV, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        self.amplitudes
    }

    /// Total intensity in units of I_0.
    pub fn intensity(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Re-expresses the same field in `basis`.
    pub fn to_basis(self, basis: Basis) -> Self {
        let [a, b] = self.amplitudes;
        let i = Complex64::i();
        let amplitudes = match (self.basis, basis) {
            (x, y) if x == y => self.amplitudes,
            (Basis::HV, Basis::RL) => [(a + i * b) * FRAC_1_SQRT_2, (a - i * b) * FRAC_1_SQRT_2],
            (Basis::RL, Basis::HV) => [(a + b) * FRAC_1_SQRT_2, -i * (a - b) * FRAC_1_SQRT_2],
            _ => unreachable!(),
        };
        Self { basis, amplitudes }
    }

    /// Projects onto linear axes rotated by `angle` from H/V and returns the
    /// two port intensities.
    pub fn analyze(self, angle: f64) -> (f64, f64) {
        let [h, v] = self.to_basis(Basis::HV).amplitudes;
        let (s, c) = angle.sin_cos();
        let h_port = h * c + v * s;
        let v_port = -h * s + v * c;
        (h_port.norm_sqr(), v_port.norm_sqr())
    }
}

/// Propagates `state` through a medium with circular optical depths
/// `alpha_r`, `alpha_l` and optional circular phases.
///
/// The R amplitude is multiplied by `exp(-α_R/2 + i φ_R)` and L likewise.
pub fn apply_dichroic_medium(
    state: PolarizationState,
    alpha_r: f64,
    alpha_l: f64,
    phase_r: f64,
    phase_l: f64,
) -> Result<PolarizationState> {
    if !(alpha_r >= 0.0 && alpha_l >= 0.0) {
        return Err(Error::invalid(format!(
            "optical depths must be non-negative, got α_R = {alpha_r}, α_L = {alpha_l}"
        )));
    }
    let original = state.basis;
    let rl = state.to_basis(Basis::RL);
    let [r, l] = rl.amplitudes;
    let out = PolarizationState::new(
        Basis::RL,
        r * Complex64::from_polar((-0.5 * alpha_r).exp(), phase_r),
        l * Complex64::from_polar((-0.5 * alpha_l).exp(), phase_l),
    );
    Ok(out.to_basis(original))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerConfig {
    /// Incoherent intensity leakage between the output ports.
    pub polarizer_extinction: f64,
    pub window_transmission: f64,
    /// Residual rotation of the analysis axes, radians.
    #[serde(default)]
    pub balance_error: f64,
}

impl Default for InterferometerConfig {
    fn default() -> Self {
        Self {
            polarizer_extinction: 1e-5,
            window_transmission: 0.95,
            balance_error: 0.0,
        }
    }
}

impl InterferometerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.polarizer_extinction) {
            return Err(Error::config(format!(
                "interferometer: field `polarizer_extinction` must lie in [0, 1), got {}",
                self.polarizer_extinction
            )));
        }
        if !(self.window_transmission > 0.0 && self.window_transmission <= 1.0) {
            return Err(Error::config(format!(
                "interferometer: field `window_transmission` must lie in (0, 1], got {}",
                self.window_transmission
            )));
        }
        if !self.balance_error.is_finite() {
            return Err(Error::config("interferometer: field `balance_error` must be finite"));
        }
        Ok(())
    }
}

/// Intensities at the two output ports, in units of the input intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortIntensities {
    pub h: f64,
    pub v: f64,
}

/// H and V port intensities for circular optical depths `alpha_r`, `alpha_l`.
pub fn filter_outputs(alpha_r: f64, alpha_l: f64, cfg: &InterferometerConfig) -> Result<PortIntensities> {
    filter_outputs_with_phase(alpha_r, alpha_l, 0.0, cfg)
}

/// As [`filter_outputs`], with a circular phase `±differential_phase`
/// applied to R and L respectively.
pub fn filter_outputs_with_phase(
    alpha_r: f64,
    alpha_l: f64,
    differential_phase: f64,
    cfg: &InterferometerConfig,
) -> Result<PortIntensities> {
    let state = apply_dichroic_medium(
        PolarizationState::horizontal(),
        alpha_r,
        alpha_l,
        differential_phase,
        -differential_phase,
    )?;
    let (h, v) = state.analyze(cfg.balance_error);
    let eps = cfg.polarizer_extinction;
    let t = cfg.window_transmission;
    Ok(PortIntensities {
        h: t * (h * (1.0 - eps) + v * eps),
        v: t * (v * (1.0 - eps) + h * eps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal(t: f64) -> InterferometerConfig {
        InterferometerConfig {
            polarizer_extinction: 0.0,
            window_transmission: t,
            balance_error: 0.0,
        }
    }

    #[test]
    fn identity_medium() {
        let s = PolarizationState::new(Basis::HV, Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.7));
        let out = apply_dichroic_medium(s, 0.0, 0.0, 0.0, 0.0).unwrap();
        for (a, b) in s.amplitudes().iter().zip(out.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn common_attenuation_keeps_h() {
        let out = apply_dichroic_medium(PolarizationState::horizontal(), 0.7, 0.7, 0.0, 0.0).unwrap();
        let (h, v) = out.analyze(0.0);
        assert!((h - (-0.7f64).exp()).abs() < 1e-15);
        assert!(v < 1e-30);
    }

    #[test]
    fn operating_point_v_port() {
        let out = apply_dichroic_medium(PolarizationState::horizontal(), 5.0, 0.3, 0.0, 0.0).unwrap();
        let (_, v) = out.analyze(0.0);
        let closed = (-2.65f64).exp() * 1.175f64.sinh().powi(2);
        assert!((v - closed).abs() < 1e-14);
        assert!((v - 0.15156).abs() < 1e-4);
    }

    #[test]
    fn balanced_dark_port() {
        let out = filter_outputs(0.0, 0.0, &ideal(1.0)).unwrap();
        assert!((out.h - 1.0).abs() < 1e-15);
        assert!(out.v.abs() < 1e-30);
    }

    #[test]
    fn with_windows() {
        let out = filter_outputs(5.0, 0.3, &ideal(0.95)).unwrap();
        assert!((out.v - 0.1440).abs() < 5e-4, "{}", out.v);
        assert!((out.h - 0.2111).abs() < 5e-4, "{}", out.h);
    }

    #[test]
    fn leakage_floor() {
        let cfg = InterferometerConfig {
            polarizer_extinction: 1e-5,
            window_transmission: 1.0,
            balance_error: 0.0,
        };
        let out = filter_outputs(3.0, 3.0, &cfg).unwrap();
        assert!((out.v - (-3f64).exp() * 1e-5).abs() < 1e-9);
    }

    #[test]
    fn negative_depth_rejected() {
        assert!(filter_outputs(-0.1, 0.0, &ideal(1.0)).is_err());
    }

    #[test]
    fn balance_error_leaks_h() {
        let cfg = InterferometerConfig {
            balance_error: 0.01,
            ..ideal(1.0)
        };
        let out = filter_outputs(0.0, 0.0, &cfg).unwrap();
        assert!((out.v - 0.01f64.sin().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(InterferometerConfig::default().validate().is_ok());
        let bad = InterferometerConfig {
            polarizer_extinction: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("polarizer_extinction"));
    }
}
