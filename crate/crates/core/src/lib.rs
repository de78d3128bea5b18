//! Forward model of a narrow-band optical filter built from circular
//! dichroism that a pump beam writes into one velocity class of a rubidium
//! vapor.
//!
//! The pipeline runs, per velocity class, from hyperfine line strengths
//! ([`atomic_data`]) through steady-state optical pumping ([`pumping`]) to the
//! circular optical depths seen by a counter-propagating probe
//! ([`dichroism`]), and finally through a polarizer / splitter pair
//! ([`polarization_optics`]). [`scan`] assembles spectra, pump-tuning sweeps
//! and calibration; [`fitting`] supplies the lineshape fits used for every
//! reported width and center.

pub mod atomic_data;
pub mod cli;
pub mod config;
pub mod dichroism;
pub mod error;
pub mod fitting;
pub mod polarization_optics;
pub mod pumping;
pub mod scan;
pub mod selftest;

pub use error::{Error, Result};
