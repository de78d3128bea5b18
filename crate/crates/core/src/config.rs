//! The JSON run configuration read by the command-line front end.
//!
//! Units throughout: frequencies in MHz, rates in s⁻¹, lengths in m,
//! temperatures in K. Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::atomic_data::AtomDatabase;
use crate::dichroism::{CellConfig, ProbeHelicity, ProbeSettings};
use crate::error::{Error, Result};
use crate::polarization_optics::InterferometerConfig;
use crate::pumping::{PumpConfig, RelaxationConfig};
use crate::scan::{detuning_sweep, CalibrationTargets, ProbeGridSpec, SimulationConfig, VelocityGridSpec};

/// Value of the `schema` field understood by this version.
pub const SCHEMA: &str = "dichroic-filter/config/v1";

/// Label of the isotope added as a thermal background when
/// `cell.include_85rb` is set.
pub const BACKGROUND_ISOTOPE: &str = "85Rb";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Homogeneous probe width; the isotope's natural linewidth if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogeneous_width_mhz: Option<f64>,
    #[serde(default)]
    pub helicity: ProbeHelicity,
    #[serde(default)]
    pub grid: ProbeGridSpec,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            homogeneous_width_mhz: None,
            helicity: ProbeHelicity::CounterPropagating,
            grid: ProbeGridSpec::default(),
        }
    }
}

/// Pump detunings visited by `tune`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub step_mhz: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            start_mhz: -400.0,
            stop_mhz: 400.0,
            step_mhz: 25.0,
        }
    }
}

impl SweepSpec {
    pub fn detunings(&self) -> Result<Vec<f64>> {
        detuning_sweep(self.start_mhz, self.stop_mhz, self.step_mhz)
    }
}

fn default_isotope() -> String {
    "87Rb".into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    /// Reference data; relative paths are taken from the config's directory.
    pub atoms_file: PathBuf,
    #[serde(default = "default_isotope")]
    pub isotope: String,
    #[serde(default)]
    pub cell: CellConfig,
    pub pump: PumpConfig,
    #[serde(default)]
    pub relaxation: RelaxationConfig,
    #[serde(default)]
    pub interferometer: InterferometerConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub velocity_grid: VelocityGridSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub calibration: CalibrationTargets,
    /// Relative paths are taken from the config's directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// A parsed config together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub run: RunConfig,
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let run: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("config: {e}")))?;
        if run.schema != SCHEMA {
            return Err(Error::config(format!(
                "config: field `schema` must be \"{SCHEMA}\", got \"{}\"",
                run.schema
            )));
        }
        Ok(run)
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config file {}: {e}", path.display())))?;
        let run = Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { run, base_dir })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn atoms_path(&self, base_dir: &Path) -> PathBuf {
        base_dir.join(&self.atoms_file)
    }

    pub fn output_path(&self, base_dir: &Path) -> PathBuf {
        base_dir.join(&self.output_dir)
    }

    /// Loads reference data and checks every section before any
    /// computation starts.
    pub fn resolve(&self, base_dir: &Path) -> Result<SimulationConfig> {
        let db = AtomDatabase::load(&self.atoms_path(base_dir))?;
        let atom = db.get(&self.isotope)?.clone();
        let background = if self.cell.include_85rb {
            if self.isotope == BACKGROUND_ISOTOPE {
                return Err(Error::config(format!(
                    "cell: field `include_85rb` needs a pumped isotope other than {BACKGROUND_ISOTOPE}"
                )));
            }
            Some(db.get(BACKGROUND_ISOTOPE)?.clone())
        } else {
            None
        };
        let probe = ProbeSettings {
            homogeneous_width_mhz: self.probe.homogeneous_width_mhz.unwrap_or(atom.natural_linewidth),
            helicity: self.probe.helicity,
        };
        let sim = SimulationConfig {
            atom,
            background,
            cell: self.cell,
            pump: self.pump,
            relaxation: self.relaxation,
            interferometer: self.interferometer,
            probe,
            probe_grid: self.probe.grid,
            velocity_grid: self.velocity_grid,
        };
        sim.validate()?;
        self.sweep.detunings()?;
        self.calibration.validate()?;
        Ok(sim)
    }
}
