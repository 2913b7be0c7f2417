//! Forward models and inverse analysis for radiation-pressure sideband cooling
//! of a nanomechanical resonator.
//!
//! All angular frequencies are in rad/s. Spectra are sampled on uniform grids in
//! ordinary frequency (Hz) and integrate over Hz.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod measurement;
pub mod model;
pub mod quantum;
pub mod sideband;
pub mod spectrum;
pub mod thermal;
pub mod units;

pub use error::{Error, Result};
pub use model::{BathState, CavityParams, CoolingResult, DriveState, MechParams};
pub use spectrum::{FrequencyGrid, Sidedness, Spectrum};
