//! Inverse pipeline: background subtraction, Lorentzian fits, calibration-chain
//! bookkeeping, phonon thermometry and its uncertainty.

mod calibration;
mod curve;
mod fit;
mod thermometry;

pub use calibration::{
    extract_insertion_losses, modulation_depth, CalibrationRecord, InsertionLosses,
};
pub use curve::{mode_thermometry_curve, CurvePoint, CurveRow, Plateau, ThermometryCurve};
pub use fit::{
    fit_lorentzian, fit_lorentzian_weighted, lorentzian, LorentzFit, LorentzGuess, MAX_ITERATIONS,
};
pub use thermometry::{
    intrinsic_linewidth, occupancy_formula, phonon_number, phonon_uncertainty, subtract_background,
    thermometry_from_ledger, InputLedger, Measured, SystemEstimate, ThermometryResult,
    UncertaintyReport, MONTE_CARLO_DRAWS,
};
