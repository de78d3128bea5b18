#![allow(dead_code)]

use dichroic_filter::atomic_data::{transition_strengths, AtomDatabase, AtomSpec, HyperfineLine};
use dichroic_filter::pumping::{Polarization, PumpConfig};

pub fn rb87() -> AtomSpec {
    AtomDatabase::builtin().get("87Rb").unwrap().clone()
}

pub fn rb85() -> AtomSpec {
    AtomDatabase::builtin().get("85Rb").unwrap().clone()
}

pub fn pump(s: f64, detuning: f64) -> PumpConfig {
    PumpConfig {
        detuning_mhz: detuning,
        saturation_parameter: s,
        polarization: Polarization::SigmaPlus,
        target_line: Default::default(),
    }
}

/// Saturation parameter of the shipped configuration.
pub fn shipped_saturation() -> f64 {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["pump"]["saturation_parameter"].as_f64().unwrap()
}

pub fn default_config_path() -> std::path::PathBuf {
    std::path::PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.json"))
}

/// Rate equations for the ground sublevels of `atom`, assembled directly
/// from the line-strength table, integrated with fixed-step RK4 from the
/// thermal state for `horizon_transits` transit times.
///
/// Ordering: lower ground level first, `m` ascending, like the library.
pub struct TimeStepOracle {
    n: usize,
    /// (ground index, total excitation rate, decay distribution over ground indices)
    channels: Vec<(usize, f64, Vec<f64>)>,
    gamma_t: f64,
}

impl TimeStepOracle {
    pub fn new(atom: &AtomSpec, v: f64, pump: &PumpConfig, gamma_t: f64) -> Self {
        let (g_lo, g_hi) = atom.ground_levels();
        let (e_lo, e_hi) = atom.excited_levels();
        let levels: Vec<(i32, i32)> = [g_lo, g_hi]
            .iter()
            .flat_map(|&f| (-f..=f).map(move |m| (f, m)))
            .collect();
        let index = |f: i32, m: i32| levels.iter().position(|&l| l == (f, m)).unwrap();
        let all: Vec<HyperfineLine> = [g_lo, g_hi]
            .iter()
            .flat_map(|&g| [e_lo, e_hi].map(|e| transition_strengths(atom, g, e).unwrap()))
            .collect();
        // decay distribution of |F', m'> over ground sublevels
        let decay = |fe: i32, me: i32| -> Vec<f64> {
            let mut w = vec![0.0; levels.len()];
            for line in all.iter().filter(|l| l.excited_f == fe) {
                for q in [-1, 0, 1] {
                    let mg = me - q;
                    if mg.abs() <= line.ground_f {
                        w[index(line.ground_f, mg)] += line.strength(mg, q);
                    }
                }
            }
            let total: f64 = w.iter().sum();
            w.iter().map(|x| x / total).collect()
        };
        let q = pump.polarization.q();
        let gamma = 2.0 * std::f64::consts::PI * atom.natural_linewidth * 1e6;
        let width = atom.natural_linewidth * (1.0 + pump.saturation_parameter).sqrt();
        let k = 1.0 / (atom.wavelength_m * 1e6);
        let mut channels = Vec::new();
        for (fe, offset) in [(e_lo, 0.0), (e_hi, atom.excited_splitting)] {
            let line = transition_strengths(atom, g_hi, fe).unwrap();
            let det = pump.detuning_mhz - k * v - offset;
            let lor = 1.0 / (1.0 + (2.0 * det / width).powi(2));
            for mg in -g_hi..=g_hi {
                let me = mg + q;
                if me.abs() > fe {
                    continue;
                }
                let rate = 0.5 * gamma * pump.saturation_parameter * line.strength(mg, q) * lor;
                if rate > 0.0 {
                    channels.push((index(g_hi, mg), rate, decay(fe, me)));
                }
            }
        }
        Self {
            n: levels.len(),
            channels,
            gamma_t,
        }
    }

    fn derivative(&self, p: &[f64]) -> Vec<f64> {
        let thermal = 1.0 / self.n as f64;
        let mut d: Vec<f64> = p.iter().map(|x| self.gamma_t * (thermal - x)).collect();
        for (g, rate, dist) in &self.channels {
            let flow = rate * p[*g];
            d[*g] -= flow;
            for (gp, b) in dist.iter().enumerate() {
                d[gp] += flow * b;
            }
        }
        d
    }

    fn stiffness(&self) -> f64 {
        self.gamma_t + self.channels.iter().map(|c| c.1).fold(0.0, f64::max)
    }

    pub fn integrate(&self, horizon_transits: f64) -> Vec<f64> {
        let t_end = horizon_transits / self.gamma_t;
        let h = (1.0 / self.stiffness()).min(0.05 / self.gamma_t);
        let steps = (t_end / h).ceil() as usize;
        let h = t_end / steps as f64;
        let mut p = vec![1.0 / self.n as f64; self.n];
        let axpy = |p: &[f64], k: &[f64], a: f64| -> Vec<f64> { p.iter().zip(k).map(|(x, y)| x + a * y).collect() };
        for _ in 0..steps {
            let k1 = self.derivative(&p);
            let k2 = self.derivative(&axpy(&p, &k1, 0.5 * h));
            let k3 = self.derivative(&axpy(&p, &k2, 0.5 * h));
            let k4 = self.derivative(&axpy(&p, &k3, h));
            for i in 0..self.n {
                p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        p
    }

    /// Infinity norm of dp/dt at `p`, in units of γ_t.
    pub fn residual(&self, p: &[f64]) -> f64 {
        self.derivative(p).iter().fold(0.0f64, |m, x| m.max(x.abs())) / self.gamma_t
    }
}

/// Doppler FWHM recomputed from CODATA constants, MHz.
pub fn analytic_doppler_fwhm(mass_kg: f64, wavelength_m: f64, temperature: f64) -> f64 {
    const K_B: f64 = 1.380_649e-23;
    let sigma_hz = (K_B * temperature / mass_kg).sqrt() / wavelength_m;
    2.0 * (2.0 * std::f64::consts::LN_2).sqrt() * sigma_hz / 1e6
}

/// The shipped configuration, resolved against its own directory.
pub fn shipped_config() -> dichroic_filter::scan::SimulationConfig {
    let loaded = dichroic_filter::config::RunConfig::load(&default_config_path()).unwrap();
    loaded.run.resolve(&loaded.base_dir).unwrap()
}
