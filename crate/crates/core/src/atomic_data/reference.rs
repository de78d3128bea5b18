//! The `atoms.json` reference-data file.
//!
//! One record per isotope:
//!
//! ```json
//! { "label": "87Rb", "mass_kg": 1.443160648e-25, "wavelength_m": 7.94978851156e-7,
//!   "gamma_mhz": 6.0, "nuclear_spin_x2": 3, "ground_splitting_mhz": 6834.682610904,
//!   "excited_splitting_mhz": 814.5, "abundance": 0.2783, "line_offset_mhz": 0.0 }
//! ```
//!
//! `line_offset_mhz` places the isotope's `F = I+1/2 -> F' = I-1/2` line on the
//! common detuning axis; it is optional and defaults to zero.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HalfInt;
use crate::error::{Error, Result};

const BUILTIN_ATOMS: &str = include_str!("../../data/atoms.json");

/// Raw record as stored in `atoms.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomRecord {
    pub label: String,
    pub mass_kg: f64,
    pub wavelength_m: f64,
    pub gamma_mhz: f64,
    pub nuclear_spin_x2: i32,
    pub ground_splitting_mhz: f64,
    pub excited_splitting_mhz: f64,
    pub abundance: f64,
    #[serde(default)]
    pub line_offset_mhz: f64,
}

/// Validated D1-line data for one isotope.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpec {
    pub label: String,
    pub mass_kg: f64,
    pub wavelength_m: f64,
    /// Natural linewidth Γ/2π in MHz.
    pub natural_linewidth: f64,
    pub nuclear_spin: HalfInt,
    pub ground_splitting: f64,
    pub excited_splitting: f64,
    pub abundance: f64,
    pub line_offset: f64,
}

impl AtomSpec {
    /// Ground-state electronic angular momentum of the D1 line (5S1/2).
    pub fn ground_j(&self) -> HalfInt {
        HalfInt::HALF
    }

    /// Excited-state electronic angular momentum of the D1 line (5P1/2).
    pub fn excited_j(&self) -> HalfInt {
        HalfInt::HALF
    }

    /// Doppler shift per unit velocity, `1/λ`, in MHz per (m/s).
    pub fn wavevector_mhz_per_mps(&self) -> f64 {
        1.0 / (self.wavelength_m * 1e6)
    }

    /// Natural decay rate Γ in s⁻¹ (angular).
    pub fn gamma_rate(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.natural_linewidth * 1e6
    }

    /// The two ground hyperfine levels `(I-1/2, I+1/2)`.
    pub fn ground_levels(&self) -> (i32, i32) {
        let i2 = self.nuclear_spin.twice();
        ((i2 - 1) / 2, (i2 + 1) / 2)
    }

    /// The two excited hyperfine levels `(I-1/2, I+1/2)`; same as the ground
    /// levels on the D1 line.
    pub fn excited_levels(&self) -> (i32, i32) {
        self.ground_levels()
    }

    pub fn to_record(&self) -> AtomRecord {
        AtomRecord {
            label: self.label.clone(),
            mass_kg: self.mass_kg,
            wavelength_m: self.wavelength_m,
            gamma_mhz: self.natural_linewidth,
            nuclear_spin_x2: self.nuclear_spin.twice(),
            ground_splitting_mhz: self.ground_splitting,
            excited_splitting_mhz: self.excited_splitting,
            abundance: self.abundance,
            line_offset_mhz: self.line_offset,
        }
    }
}

impl TryFrom<AtomRecord> for AtomSpec {
    type Error = Error;

    fn try_from(r: AtomRecord) -> Result<Self> {
        let bad = |field: &str, why: &str| {
            Error::config(format!("atom record `{}`: field `{field}` {why}", r.label))
        };
        let positive = |field: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(bad(field, &format!("must be positive and finite, got {x}")))
            }
        };
        if r.label.trim().is_empty() {
            return Err(Error::config("atom record: field `label` must be non-empty"));
        }
        positive("mass_kg", r.mass_kg)?;
        positive("wavelength_m", r.wavelength_m)?;
        positive("gamma_mhz", r.gamma_mhz)?;
        positive("ground_splitting_mhz", r.ground_splitting_mhz)?;
        positive("excited_splitting_mhz", r.excited_splitting_mhz)?;
        // Odd twice-spin keeps every hyperfine F integer for J = 1/2.
        if r.nuclear_spin_x2 < 1 || r.nuclear_spin_x2 % 2 == 0 {
            return Err(bad(
                "nuclear_spin_x2",
                &format!("must be an odd positive integer, got {}", r.nuclear_spin_x2),
            ));
        }
        if !(0.0..=1.0).contains(&r.abundance) {
            return Err(bad("abundance", &format!("must lie in [0, 1], got {}", r.abundance)));
        }
        if !r.line_offset_mhz.is_finite() {
            return Err(bad("line_offset_mhz", "must be finite"));
        }
        Ok(AtomSpec {
            natural_linewidth: r.gamma_mhz,
            nuclear_spin: HalfInt::from_twice(r.nuclear_spin_x2),
            mass_kg: r.mass_kg,
            wavelength_m: r.wavelength_m,
            ground_splitting: r.ground_splitting_mhz,
            excited_splitting: r.excited_splitting_mhz,
            abundance: r.abundance,
            line_offset: r.line_offset_mhz,
            label: r.label,
        })
    }
}

/// The set of isotopes loaded from an `atoms.json` file.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomDatabase {
    atoms: Vec<AtomSpec>,
}

impl AtomDatabase {
    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<AtomRecord> = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("atoms.json: {e}")))?;
        if records.is_empty() {
            return Err(Error::config("atoms.json: no isotope records"));
        }
        let atoms = records
            .into_iter()
            .map(AtomSpec::try_from)
            .collect::<Result<Vec<_>>>()?;
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].iter().any(|b| b.label == a.label) {
                return Err(Error::config(format!(
                    "atoms.json: duplicate `label` {}",
                    a.label
                )));
            }
        }
        Ok(Self { atoms })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read atom data file {}: {e}", path.display()))
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The reference data shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_ATOMS).expect("bundled atoms.json is valid")
    }

    pub fn get(&self, label: &str) -> Result<&AtomSpec> {
        self.atoms
            .iter()
            .find(|a| a.label == label)
            .ok_or_else(|| Error::config(format!("isotope `{label}` not found in atom data")))
    }

    pub fn atoms(&self) -> &[AtomSpec] {
        &self.atoms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_both_isotopes() {
        let db = AtomDatabase::builtin();
        let rb87 = db.get("87Rb").unwrap();
        assert_eq!(rb87.nuclear_spin, HalfInt::from_twice(3));
        assert_eq!(rb87.natural_linewidth, 6.0);
        assert_eq!(rb87.ground_levels(), (1, 2));
        let rb85 = db.get("85Rb").unwrap();
        assert_eq!(rb85.ground_levels(), (2, 3));
        assert!((rb85.abundance + rb87.abundance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors_name_the_field() {
        let text = r#"[{"label":"X","mass_kg":-1,"wavelength_m":7.9e-7,"gamma_mhz":6,
            "nuclear_spin_x2":3,"ground_splitting_mhz":1,"excited_splitting_mhz":1,"abundance":1}]"#;
        let err = AtomDatabase::from_json(text).unwrap_err().to_string();
        assert!(err.contains("mass_kg"), "{err}");

        let missing = r#"[{"label":"X","wavelength_m":7.9e-7,"gamma_mhz":6,
            "nuclear_spin_x2":3,"ground_splitting_mhz":1,"excited_splitting_mhz":1,"abundance":1}]"#;
        let err = AtomDatabase::from_json(missing).unwrap_err().to_string();
        assert!(err.contains("mass_kg"), "{err}");

        let spin = text.replace("-1", "1e-25").replace("\"nuclear_spin_x2\":3", "\"nuclear_spin_x2\":2");
        let err = AtomDatabase::from_json(&spin).unwrap_err().to_string();
        assert!(err.contains("nuclear_spin_x2"), "{err}");

        let unknown = text.replace("-1", "1e-25").replace("\"abundance\":1", "\"abundance\":1,\"extra\":2");
        let err = AtomDatabase::from_json(&unknown).unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn missing_file_names_path() {
        let err = AtomDatabase::load(Path::new("/nonexistent/atoms.json")).unwrap_err();
        assert!(err.to_string().contains("atoms.json"));
        assert_eq!(err.exit_code(), 2);
    }
}
