use std::f64::consts::PI;

use super::AtomSpec;
use crate::error::{Error, Result};

/// Boltzmann constant in J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380_649e-23;

fn check_temperature(temperature: f64) -> Result<()> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid(format!(
            "temperature must be positive, got {temperature} K"
        )));
    }
    Ok(())
}

/// One-dimensional thermal velocity spread `sqrt(k_B T / m)` in m/s.
pub fn velocity_sigma(atom: &AtomSpec, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    Ok((BOLTZMANN * temperature / atom.mass_kg).sqrt())
}

/// Gaussian Doppler width (standard deviation) of the line in MHz.
pub fn doppler_sigma(atom: &AtomSpec, temperature: f64) -> Result<f64> {
    Ok(velocity_sigma(atom, temperature)? * atom.wavevector_mhz_per_mps())
}

/// Doppler full width at half maximum in MHz.
pub fn doppler_fwhm(atom: &AtomSpec, temperature: f64) -> Result<f64> {
    Ok(2.0 * (2.0 * std::f64::consts::LN_2).sqrt() * doppler_sigma(atom, temperature)?)
}

/// Longitudinal Maxwell-Boltzmann density in s/m.
pub fn maxwell_boltzmann_pdf(v: f64, atom: &AtomSpec, temperature: f64) -> Result<f64> {
    let sigma = velocity_sigma(atom, temperature)?;
    Ok(gaussian_pdf(v, sigma))
}

fn gaussian_pdf(v: f64, sigma: f64) -> f64 {
    let z = v / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Uniform, symmetric velocity grid with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
    density: Vec<f64>,
    temperature: f64,
    sigma_v: f64,
}

impl VelocityGrid {
    /// `points` samples spanning `±half_width_sigmas · σ_v`.
    pub fn new(atom: &AtomSpec, temperature: f64, half_width_sigmas: f64, points: usize) -> Result<Self> {
        let sigma_v = velocity_sigma(atom, temperature)?;
        if points < 3 || points % 2 == 0 {
            return Err(Error::invalid(format!(
                "velocity grid needs an odd number of points >= 3, got {points}"
            )));
        }
        if !(half_width_sigmas >= 4.0) {
            return Err(Error::invalid(format!(
                "velocity grid must span at least ±4 sigma, got ±{half_width_sigmas}"
            )));
        }
        let half_span = half_width_sigmas * sigma_v;
        let n = points - 1;
        let step = 2.0 * half_span / n as f64;
        // Build from the center outwards so the grid is exactly symmetric.
        let mid = n / 2;
        let v: Vec<f64> = (0..points)
            .map(|i| (i as f64 - mid as f64) * step)
            .collect();
        let mut weights = vec![step; points];
        weights[0] = 0.5 * step;
        weights[n] = 0.5 * step;
        let density = v.iter().map(|&x| gaussian_pdf(x, sigma_v)).collect();
        Ok(Self {
            points: v,
            weights,
            density,
            temperature,
            sigma_v,
        })
    }

    /// Default discretization: ±4.5 σ_v with 2001 points.
    pub fn standard(atom: &AtomSpec, temperature: f64) -> Result<Self> {
        Self::new(atom, temperature, 4.5, 2001)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Maxwell-Boltzmann density at each grid point.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn sigma_v(&self) -> f64 {
        self.sigma_v
    }

    pub fn span(&self) -> f64 {
        self.points[self.points.len() - 1] - self.points[0]
    }

    /// Trapezoid integral of `f(v) · pdf(v)` over the grid.
    pub fn integrate_thermal(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .zip(&self.density)
            .map(|((&v, &w), &p)| w * p * f(v))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic_data::AtomDatabase;

    fn rb87() -> AtomSpec {
        AtomDatabase::builtin().get("87Rb").unwrap().clone()
    }

    #[test]
    fn sigma_scaling() {
        let atom = rb87();
        let s = doppler_sigma(&atom, 300.0).unwrap();
        let s4 = doppler_sigma(&atom, 1200.0).unwrap();
        assert!((s4 / s - 2.0).abs() < 1e-14);

        let mut heavy = atom.clone();
        heavy.mass_kg *= 4.0;
        let sh = doppler_sigma(&heavy, 300.0).unwrap();
        assert!((s / sh - 2.0).abs() < 1e-14);
    }

    #[test]
    fn pdf_peak_and_symmetry() {
        let atom = rb87();
        let sigma = velocity_sigma(&atom, 338.15).unwrap();
        let p0 = maxwell_boltzmann_pdf(0.0, &atom, 338.15).unwrap();
        assert!((p0 - 1.0 / (sigma * (2.0 * PI).sqrt())).abs() < 1e-18);
        for v in [1.0, 50.0, 333.3] {
            let a = maxwell_boltzmann_pdf(v, &atom, 338.15).unwrap();
            let b = maxwell_boltzmann_pdf(-v, &atom, 338.15).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn non_positive_temperature_rejected() {
        let atom = rb87();
        assert!(doppler_sigma(&atom, 0.0).is_err());
        assert!(maxwell_boltzmann_pdf(0.0, &atom, -1.0).is_err());
    }

    #[test]
    fn grid_invariants() {
        let atom = rb87();
        let g = VelocityGrid::standard(&atom, 338.15).unwrap();
        assert_eq!(g.len(), 2001);
        let pts = g.points();
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
        for i in 0..pts.len() {
            assert_eq!(pts[i], -pts[pts.len() - 1 - i]);
        }
        assert!(pts[pts.len() - 1] >= 4.0 * g.sigma_v());
        let wsum: f64 = g.weights().iter().sum();
        assert!((wsum - g.span()).abs() < 1e-9 * g.span());
        let norm = g.integrate_thermal(|_| 1.0);
        assert!(norm >= 0.9999 && norm <= 1.0 + 1e-12, "{norm}");
    }

    #[test]
    fn five_sigma_quadrature() {
        let atom = rb87();
        let g = VelocityGrid::new(&atom, 338.15, 5.0, 2001).unwrap();
        let norm = g.integrate_thermal(|_| 1.0);
        assert!((0.99999..=1.0).contains(&norm), "{norm}");
    }

    #[test]
    fn bad_grids_rejected() {
        let atom = rb87();
        assert!(VelocityGrid::new(&atom, 300.0, 4.5, 2000).is_err());
        assert!(VelocityGrid::new(&atom, 300.0, 3.0, 2001).is_err());
    }
}
