//! Quick in-process invariant checks run by the `selftest` command.

use crate::atomic_data::{doppler_fwhm, transition_strengths, wigner3j, AtomDatabase, HalfInt, POLARIZATIONS};
use crate::error::Result;
use crate::fitting::{fit_lorentzian, FitModel, Lorentzian};
use crate::polarization_optics::{filter_outputs, InterferometerConfig};
use crate::pumping::{PumpConfig, PumpingScheme, RelaxationConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("3j orthogonality", orthogonality),
    ("line strength sum rule", sum_rule),
    ("stretched state is dark", dark_stretched),
    ("Doppler FWHM at 338.15 K", doppler),
    ("population conservation", conservation),
    ("dark-state accumulation", dark_accumulation),
    ("port energy split", energy_split),
    ("operating-point transmission", operating_point),
    ("Lorentzian self-fit", lorentzian_self_fit),
];

pub fn run_all() -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|&(name, check)| match check() {
            Ok((passed, detail)) => CheckOutcome { name, passed, detail },
            Err(e) => CheckOutcome {
                name,
                passed: false,
                detail: e.to_string(),
            },
        })
        .collect()
}

fn orthogonality() -> Result<(bool, String)> {
    // Σ_{m1} (j1 j2 j3; m1 m2 m3)(j1 j2 j3'; m1 m2 m3) = δ_{j3 j3'}/(2 j3 + 1),
    // with m2 = -m1 - m3 and m3 fixed
    let h = HalfInt::integer;
    let (j1, j2) = (2i32, 1i32);
    let mut worst = 0.0f64;
    for j3 in 1..=3 {
        for j3p in 1..=3 {
            for m3 in -j3.min(j3p)..=j3.min(j3p) {
                let mut sum = 0.0;
                for m1 in -j1..=j1 {
                    let m2 = -m1 - m3;
                    if m2.abs() > j2 {
                        continue;
                    }
                    sum += wigner3j(h(j1), h(j2), h(j3), h(m1), h(m2), h(m3))?
                        * wigner3j(h(j1), h(j2), h(j3p), h(m1), h(m2), h(m3))?;
                }
                let expected = if j3 == j3p { 1.0 / (2 * j3 + 1) as f64 } else { 0.0 };
                worst = worst.max((sum - expected).abs());
            }
        }
    }
    Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
}

fn sum_rule() -> Result<(bool, String)> {
    let db = AtomDatabase::builtin();
    let mut worst = 0.0f64;
    for atom in db.atoms() {
        let (e_lo, e_hi) = atom.excited_levels();
        let (g_lo, g_hi) = atom.ground_levels();
        for g in [g_lo, g_hi] {
            let lines = [transition_strengths(atom, g, e_lo)?, transition_strengths(atom, g, e_hi)?];
            for m in -g..=g {
                let total: f64 = lines
                    .iter()
                    .flat_map(|l| POLARIZATIONS.iter().map(move |&q| l.strength(m, q)))
                    .sum();
                worst = worst.max((total - 1.0).abs());
            }
        }
    }
    Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
}

fn dark_stretched() -> Result<(bool, String)> {
    let atom = AtomDatabase::builtin().get("87Rb")?.clone();
    let line = transition_strengths(&atom, 2, 1)?;
    let s = line.strength(2, 1);
    Ok((s == 0.0, format!("strength(F=2, m=2, σ+ -> F'=1) = {s}")))
}

fn doppler() -> Result<(bool, String)> {
    let atom = AtomDatabase::builtin().get("87Rb")?.clone();
    let w = doppler_fwhm(&atom, 338.15)?;
    Ok(((w - 532.8).abs() <= 0.5, format!("{w:.3} MHz")))
}

fn pump(s: f64) -> PumpConfig {
    PumpConfig {
        detuning_mhz: 0.0,
        saturation_parameter: s,
        polarization: Default::default(),
        target_line: Default::default(),
    }
}

fn conservation() -> Result<(bool, String)> {
    let atom = AtomDatabase::builtin().get("87Rb")?.clone();
    let scheme = PumpingScheme::new(&atom)?;
    let mut worst = 0.0f64;
    for v in [-300.0, -20.0, 0.0, 55.0, 400.0] {
        let p = scheme.steady_state_at(v, &pump(10.0), &RelaxationConfig::default())?;
        worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    Ok((worst < 1e-10, format!("max |Σp - 1| = {worst:.2e}")))
}

fn dark_accumulation() -> Result<(bool, String)> {
    let atom = AtomDatabase::builtin().get("87Rb")?.clone();
    let scheme = PumpingScheme::new(&atom)?;
    let p = scheme.steady_state_at(0.0, &pump(177.0), &RelaxationConfig::default())?;
    // σ⁺ on F'=1 couples F=2 m = -2, -1, 0 only
    let bright: f64 = (-2..=0).filter_map(|m| scheme.index_of(2, m)).map(|i| p[i]).sum();
    Ok((bright < 0.02, format!("bright F=2 population {bright:.3e}")))
}

fn energy_split() -> Result<(bool, String)> {
    let cfg = InterferometerConfig {
        polarizer_extinction: 0.0,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for (r, l) in [(0.0f64, 0.0f64), (5.0, 0.3), (0.3, 5.0), (9.7, 2.2), (1e-3, 8.0)] {
        let out = filter_outputs(r, l, &cfg)?;
        let expected = cfg.window_transmission * 0.5 * ((-r).exp() + (-l).exp());
        worst = worst.max((out.h + out.v - expected).abs());
    }
    Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
}

fn operating_point() -> Result<(bool, String)> {
    let cfg = InterferometerConfig {
        polarizer_extinction: 0.0,
        window_transmission: 0.95,
        balance_error: 0.0,
    };
    let v = filter_outputs(5.0, 0.3, &cfg)?.v;
    Ok(((v - 0.1440).abs() <= 5e-4, format!("I_V = {v:.5}")))
}

fn lorentzian_self_fit() -> Result<(bool, String)> {
    let truth = [0.0, 80.0, 0.146, 0.0];
    let xs: Vec<f64> = (0..=240).map(|i| -240.0 + 2.0 * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| Lorentzian.eval(&truth, x)).collect();
    let fit = fit_lorentzian(&xs, &ys)?;
    let err = (fit.params[1] - 80.0).abs() / 80.0;
    Ok((fit.converged && err < 1e-6, format!("FWHM {:.9}", fit.params[1])))
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
