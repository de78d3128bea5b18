//! Command-line front end: `spectrum`, `tune`, `calibrate`, `selftest`.
//!
//! Exit codes: 0 success, 2 configuration or I/O, 3 numerical failure,
//! 4 calibration failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{LoadedConfig, RunConfig};
use crate::dichroism::DichroicAbsorption;
use crate::error::{Error, Result};
use crate::fitting::FitResult;
use crate::scan::{
    calibrate_to_reference, reference, simulate, spectrum_metrics, tunability_scan, CalibrationStep,
    FilterSpectrum, SpectrumMetrics, TunabilityResult,
};
use crate::selftest;

/// Schema tag written into every report.
pub const REPORT_SCHEMA: &str = "dichroic-filter/report/v1";

/// Half width of the pump-detuning window used for the center-slope fit.
pub const SLOPE_WINDOW_MHZ: f64 = 250.0;

#[derive(Debug, Parser)]
#[command(name = "dichroic-filter", version, about = "Simulate a narrow-band atomic filter")]
pub struct Cli {
    /// Worker threads; 0 picks one per core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transmission spectrum at the configured pump detuning.
    Spectrum(RunArgs),
    /// Sweep the pump detuning and track the transmission peak.
    Tune(RunArgs),
    /// Fit the pump saturation parameter to the target linewidth.
    Calibrate(RunArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write α_R and α_L on the probe grid to `alpha.csv`.
    #[arg(long)]
    pub dump_alpha: bool,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors are printed to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command inside a thread pool of the requested size.
pub fn run(cli: &Cli) -> Result<i32> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::config(format!("cannot start {} worker threads: {e}", cli.threads)))?;
    pool.install(|| match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(a).map(|_| 0),
        Command::Tune(a) => cmd_tune(a).map(|_| 0),
        Command::Calibrate(a) => cmd_calibrate(a).map(|_| 0),
        Command::Selftest => Ok(cmd_selftest()),
    })
}

struct Prepared {
    loaded: LoadedConfig,
    out_dir: PathBuf,
}

fn prepare(args: &RunArgs) -> Result<(Prepared, crate::scan::SimulationConfig)> {
    let loaded = RunConfig::load(&args.config)?;
    let sim = loaded.run.resolve(&loaded.base_dir)?;
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| loaded.run.output_path(&loaded.base_dir));
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    Ok((Prepared { loaded, out_dir }, sim))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Full-precision, locale-independent number formatting for CSV output.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with a header line, LF line endings, and a trailing newline.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(format_number).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn spectrum_csv(spec: &FilterSpectrum) -> String {
    csv(
        &["detuning_mhz", "t_v", "t_h"],
        (0..spec.len()).map(|i| vec![spec.detunings[i], spec.t_v[i], spec.t_h[i]]),
    )
}

pub fn alpha_csv(a: &DichroicAbsorption) -> String {
    csv(
        &["detuning_mhz", "alpha_r", "alpha_l"],
        (0..a.len()).map(|i| vec![a.detunings[i], a.alpha_r[i], a.alpha_l[i]]),
    )
}

pub fn tunability_csv(t: &TunabilityResult) -> String {
    csv(
        &["pump_detuning_mhz", "peak_center_mhz", "peak_transmission"],
        (0..t.pump_detunings.len())
            .map(|i| vec![t.pump_detunings[i], t.peak_centers[i], t.peak_transmissions[i]]),
    )
}

#[derive(Debug, Serialize)]
struct RunInfo {
    schema: &'static str,
    command: &'static str,
    isotope: String,
    pump_detuning_mhz: f64,
    saturation_parameter: f64,
    transit_rate_per_s: f64,
    polarizer_extinction: f64,
    window_transmission: f64,
}

impl RunInfo {
    fn new(command: &'static str, sim: &crate::scan::SimulationConfig) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            command,
            isotope: sim.atom.label.clone(),
            pump_detuning_mhz: sim.pump.detuning_mhz,
            saturation_parameter: sim.pump.saturation_parameter,
            transit_rate_per_s: sim.relaxation.transit_rate_per_s,
            polarizer_extinction: sim.interferometer.polarizer_extinction,
            window_transmission: sim.interferometer.window_transmission,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SpectrumReport {
    #[serde(flatten)]
    run: RunInfo,
    #[serde(flatten)]
    pub metrics: SpectrumMetrics,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Writes `spectrum.csv` and `report.json` (and `alpha.csv` on request).
pub fn cmd_spectrum(args: &RunArgs) -> Result<SpectrumReport> {
    let (prep, sim) = prepare(args)?;
    let run = simulate(&sim)?;
    let metrics = spectrum_metrics(&sim, &run)?;
    write_file(&prep.out_dir.join("spectrum.csv"), &spectrum_csv(&run.spectrum))?;
    if args.dump_alpha {
        write_file(&prep.out_dir.join("alpha.csv"), &alpha_csv(&run.absorption))?;
    }
    let report = SpectrumReport {
        run: RunInfo::new("spectrum", &sim),
        metrics,
    };
    for flag in &report.metrics.flags {
        eprintln!("note: {flag}");
    }
    write_file(&prep.out_dir.join("report.json"), &to_json(&report))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeFit {
    pub c1_mhz: f64,
    pub sigma1_mhz: f64,
    pub a1: f64,
    pub c2_mhz: f64,
    pub sigma2_mhz: f64,
    pub a2: f64,
    pub offset: f64,
    pub separation_mhz: f64,
    /// Residual RMS divided by the largest peak transmission.
    pub residual_rms_fraction: f64,
    pub converged: bool,
    pub degenerate: bool,
}

impl EnvelopeFit {
    fn from_fit(fit: &FitResult, max: f64) -> Self {
        let p = &fit.params;
        Self {
            c1_mhz: p[0],
            sigma1_mhz: p[1],
            a1: p[2],
            c2_mhz: p[3],
            sigma2_mhz: p[4],
            a2: p[5],
            offset: p[6],
            separation_mhz: (p[3] - p[0]).abs(),
            residual_rms_fraction: fit.residual_rms / max,
            converged: fit.converged,
            degenerate: fit.degenerate,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TunabilityReport {
    pub slope: Option<f64>,
    pub intercept_mhz: Option<f64>,
    pub slope_window_mhz: f64,
    pub envelope: Option<EnvelopeFit>,
    pub excited_splitting_mhz: f64,
    pub unresolved: Vec<Unresolved>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Unresolved {
    pub pump_detuning_mhz: f64,
    pub reason: String,
}

#[derive(Debug, Serialize)]
pub struct TuneReport {
    #[serde(flatten)]
    run: RunInfo,
    pub tunability: TunabilityReport,
}

pub fn tunability_report(t: &TunabilityResult, excited_splitting: f64) -> TunabilityReport {
    let (slope, intercept) = match t.center_slope(SLOPE_WINDOW_MHZ) {
        Ok((m, b)) => (Some(m), Some(b)),
        Err(_) => (None, None),
    };
    let max = t.peak_transmissions.iter().copied().fold(0.0, f64::max);
    let envelope = t
        .envelope_fit(excited_splitting)
        .ok()
        .filter(|_| max > 0.0)
        .map(|f| EnvelopeFit::from_fit(&f, max));
    TunabilityReport {
        slope,
        intercept_mhz: intercept,
        slope_window_mhz: SLOPE_WINDOW_MHZ,
        envelope,
        excited_splitting_mhz: excited_splitting,
        unresolved: (0..t.pump_detunings.len())
            .filter_map(|i| {
                t.flags[i].as_ref().map(|r| Unresolved {
                    pump_detuning_mhz: t.pump_detunings[i],
                    reason: r.clone(),
                })
            })
            .collect(),
    }
}

/// Writes `tunability.csv` and `report.json`.
pub fn cmd_tune(args: &RunArgs) -> Result<TuneReport> {
    let (prep, sim) = prepare(args)?;
    let detunings = prep.loaded.run.sweep.detunings()?;
    let result = tunability_scan(&detunings, &sim)?;
    write_file(&prep.out_dir.join("tunability.csv"), &tunability_csv(&result))?;
    let report = TuneReport {
        run: RunInfo::new("tune", &sim),
        tunability: tunability_report(&result, sim.atom.excited_splitting),
    };
    write_file(&prep.out_dir.join("report.json"), &to_json(&report))?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct CalibrateReport {
    #[serde(flatten)]
    run: RunInfo,
    pub target_fwhm_mhz: f64,
    #[serde(flatten)]
    pub metrics: SpectrumMetrics,
    pub trace: Vec<CalibrationStep>,
}

/// Rows of `calibration.csv`: quantity, reference value, simulated value.
pub fn comparison_rows(m: &SpectrumMetrics, s: f64) -> Vec<(&'static str, f64, f64)> {
    let nan = f64::NAN;
    vec![
        ("od_unpumped", reference::OPTICAL_DEPTH, m.od_unpumped),
        ("fwhm_mhz", reference::FWHM_MHZ, m.feature_fwhm_mhz.unwrap_or(nan)),
        ("alpha_r", reference::ALPHA_R, m.alpha_r),
        ("alpha_l", reference::ALPHA_L, m.alpha_l),
        ("alpha_ratio", reference::ALPHA_R / reference::ALPHA_L, m.alpha_r / m.alpha_l),
        ("peak_transmission", reference::PEAK_TRANSMISSION, m.peak_transmission),
        ("extinction_db", reference::EXTINCTION_DB, m.extinction_db.unwrap_or(nan)),
        ("saturation_parameter", nan, s),
    ]
}

pub fn comparison_csv(rows: &[(&str, f64, f64)]) -> String {
    let mut s = String::from("quantity,reference_value,simulated_value\n");
    for (q, r, v) in rows {
        let _ = writeln!(s, "{q},{},{}", format_number(*r), format_number(*v));
    }
    s
}

/// Writes `calibrated.json`, `calibration.csv` and `report.json`.
pub fn cmd_calibrate(args: &RunArgs) -> Result<CalibrateReport> {
    let (prep, sim) = prepare(args)?;
    let cal = calibrate_to_reference(&sim, &prep.loaded.run.calibration)?;
    let s = cal.report.saturation_parameter;

    let mut calibrated = prep.loaded.run.clone();
    calibrated.pump.saturation_parameter = s;
    let atoms = prep.loaded.run.atoms_path(&prep.loaded.base_dir);
    calibrated.atoms_file = std::fs::canonicalize(&atoms).map_err(|e| Error::io(&atoms, e))?;
    // the calibrated file lives elsewhere, so relative paths would move
    let out = prep.loaded.run.output_path(&prep.loaded.base_dir);
    calibrated.output_dir = std::path::absolute(&out).map_err(|e| Error::io(&out, e))?;
    write_file(&prep.out_dir.join("calibrated.json"), &calibrated.to_json())?;

    let rows = comparison_rows(&cal.report.metrics, s);
    write_file(&prep.out_dir.join("calibration.csv"), &comparison_csv(&rows))?;
    let report = CalibrateReport {
        run: RunInfo::new("calibrate", &cal.config),
        target_fwhm_mhz: cal.report.target_fwhm_mhz,
        metrics: cal.report.metrics,
        trace: cal.report.trace,
    };
    write_file(&prep.out_dir.join("report.json"), &to_json(&report))?;
    Ok(report)
}

/// Prints one line per check; exit code 3 if any fails.
pub fn cmd_selftest() -> i32 {
    let outcomes = selftest::run_all();
    for c in &outcomes {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if outcomes.iter().all(|c| c.passed) {
        0
    } else {
        3
    }
}
