//! One synthetic measurement end to end: forward model of a sweep point and the
//! blind analysis that turns its traces back into an occupancy.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    fit_lorentzian, fit_lorentzian_weighted, lorentzian, phonon_number, subtract_background,
    CalibrationRecord, LorentzFit, LorentzGuess, Measured, SystemEstimate, ThermometryResult,
};
use crate::error::{positive, Result};
use crate::measurement::{
    budget_for_snr, stream_for, synthesize_background, synthesize_rsa_spectrum, ChainModel,
    DetectedSignal, DetectorParams, NoiseBudget, SyntheticSpectrum,
};
use crate::model::{drive_for_photons, thermal_occupancy, CavityParams, DriveState};
use crate::quantum::{photocurrent_psd, scattering_elements, LinearizedSystem};
use crate::spectrum::{FrequencyGrid, Spectrum};
use crate::thermal::{total_intrinsic_damping, DampingDecomposition, HeatingMap};
use crate::units::rad_to_hz;

/// Everything about the apparatus that stays fixed across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub cavity: CavityParams,
    pub omega_m: f64,
    pub g: f64,
    pub detector: DetectorParams,
    /// Post-cavity transmission and amplifier noise figure; the transmission is L_1.
    pub chain: ChainModel,
    /// Taper-input to device transmission.
    pub l_0: f64,
    /// Bare-taper transmission.
    pub l_taper: f64,
    /// Analyzer span as a multiple of the expected linewidth, each side.
    pub span_linewidths: f64,
    pub grid_points: usize,
    pub averages: u64,
    pub seed: u64,
    /// When set, the detected carrier power is chosen so the sideband peak sits this
    /// far above a shot-noise floor; otherwise the chain model sets the floor.
    pub snr_target: Option<f64>,
}

/// Drive and bath at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub n_c: f64,
    /// Bath temperature, K.
    pub t_b: f64,
    /// Intrinsic damping at this point, rad/s.
    pub gamma_i: f64,
}

impl OperatingPoint {
    /// Laser-heated bath: T_b from the heating map, γ_i from the damping decomposition.
    pub fn heated(
        n_c: f64,
        heating: &dyn HeatingMap,
        damping: &DampingDecomposition,
    ) -> Result<Self> {
        let t_b = positive("bath temperature", heating.temperature(n_c))?;
        let gamma_i = total_intrinsic_damping(n_c, t_b, damping)?.total;
        Ok(Self { n_c, t_b, gamma_i })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointTruth {
    pub n_c: f64,
    pub t_b: f64,
    pub n_b: f64,
    pub n_bar: f64,
    pub gamma_i: f64,
    pub gamma_om: f64,
    pub gamma: f64,
    pub cooperativity: f64,
    pub omega_m: f64,
    pub p_in: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPoint {
    pub drive: DriveState,
    pub signal: SyntheticSpectrum,
    pub background: Spectrum,
    pub budget: NoiseBudget,
    pub record: CalibrationRecord,
    pub truth: PointTruth,
}

const SHIFT_PER_WATT: f64 = 1e-7;
const RSA_PATH_TRANSMISSION: f64 = 0.5;

impl Setup {
    /// Calibration record this chain would have produced for a given device input power.
    pub fn calibration_record(&self, p_in: f64) -> Result<CalibrationRecord> {
        positive("p_in", p_in)?;
        let p_0 = p_in / self.l_0;
        let mut record = CalibrationRecord::synthesize(
            self.l_0,
            self.chain.transmission,
            self.l_taper,
            p_0,
            p_0,
            SHIFT_PER_WATT,
            RSA_PATH_TRANSMISSION,
            self.detector.electronic_gain,
            self.detector.load,
        )?;
        record.g_edfa = self.detector.edfa_gain;
        Ok(record)
    }

    pub fn grid_for(&self, gamma: f64) -> Result<FrequencyGrid> {
        FrequencyGrid::centered(
            rad_to_hz(self.omega_m),
            self.span_linewidths * rad_to_hz(gamma),
            self.grid_points,
        )
    }
}

/// Forward-simulates the analyzer trace and its far-detuned background for sweep index `index`.
pub fn simulate_point(setup: &Setup, point: &OperatingPoint, index: u64) -> Result<ForwardPoint> {
    positive("n_c", point.n_c)?;
    let drive = drive_for_photons(point.n_c, setup.omega_m, &setup.cavity)?;
    let sys = LinearizedSystem::new(setup.cavity, setup.omega_m, point.gamma_i, setup.g, drive)?;
    let gamma = sys.gamma_total();
    let grid = setup.grid_for(gamma)?;
    let elements = scattering_elements(&sys, &grid)?;
    let n_b = thermal_occupancy(point.t_b, setup.omega_m);
    let psd = photocurrent_psd(&elements, n_b)?;
    let detected = DetectedSignal::from_device(
        &setup.cavity,
        &drive,
        setup.g,
        setup.omega_m,
        gamma,
        psd.n_bar,
        setup.chain.transmission,
    )?;
    let budget = match setup.snr_target {
        Some(snr) => budget_for_snr(&detected, &setup.detector, snr)?,
        None => setup.chain.budget(
            &setup.cavity,
            &drive,
            setup.g,
            setup.omega_m,
            gamma,
            psd.n_bar,
            &setup.detector,
        )?,
    };
    let signal = synthesize_rsa_spectrum(
        &psd,
        &setup.detector,
        &budget,
        setup.seed,
        stream_for(index, false),
        setup.averages,
    )?;
    let background = synthesize_background(
        &grid,
        &setup.detector,
        &budget,
        setup.seed,
        stream_for(index, true),
        setup.averages,
    )?;
    Ok(ForwardPoint {
        drive,
        signal,
        background,
        budget,
        record: setup.calibration_record(drive.p_in)?,
        truth: PointTruth {
            n_c: point.n_c,
            t_b: point.t_b,
            n_b,
            n_bar: psd.n_bar,
            gamma_i: point.gamma_i,
            gamma_om: sys.gamma_om(),
            gamma,
            cooperativity: sys.cooperativity(),
            omega_m: psd.omega_m,
            p_in: drive.p_in,
        },
    })
}

/// Relative uncertainties assigned to the independently characterized inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputErrors {
    pub omega_o: f64,
    pub kappa: f64,
    pub kappa_e: f64,
    pub detuning: f64,
    pub gamma_i: f64,
}

impl Default for InputErrors {
    fn default() -> Self {
        Self {
            omega_o: 0.007,
            kappa: 0.007,
            kappa_e: 0.007,
            detuning: 0.003,
            gamma_i: 0.016,
        }
    }
}

pub fn system_estimate(
    cavity: &CavityParams,
    detuning: f64,
    gamma_i: f64,
    errors: &InputErrors,
) -> SystemEstimate {
    SystemEstimate {
        omega_o: Measured::relative(cavity.omega_o(), errors.omega_o),
        kappa: Measured::relative(cavity.kappa(), errors.kappa),
        kappa_e: Measured::relative(cavity.kappa_e(), errors.kappa_e),
        detuning: Measured::relative(detuning, errors.detuning),
        gamma_i: Measured::relative(gamma_i, errors.gamma_i),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointAnalysis {
    pub fit: LorentzFit,
    pub thermometry: ThermometryResult,
}

/// Background subtraction, Lorentzian fit and occupancy inference for one trace.
pub fn analyze_point(
    signal: &Spectrum,
    background: &Spectrum,
    record: &CalibrationRecord,
    system: &SystemEstimate,
) -> Result<PointAnalysis> {
    let excess = subtract_background(signal, background)?;
    let rough = fit_lorentzian(&excess, None)?;
    // analyzer bins scatter in proportion to their mean, so refit with model variances
    let floor = background.values.iter().sum::<f64>() / background.len() as f64;
    let weights: Vec<f64> = excess
        .grid
        .omegas()
        .map(|w| {
            let s = lorentzian(w, rough.amplitude, rough.omega_m, rough.gamma) + floor;
            1.0 / (s * s + floor * floor)
        })
        .collect();
    let guess = LorentzGuess {
        amplitude: rough.amplitude,
        omega_m: rough.omega_m,
        gamma: rough.gamma,
    };
    let fit = fit_lorentzian_weighted(&excess, Some(guess), Some(&weights))?;
    let thermometry = phonon_number(&fit, record, system)?;
    Ok(PointAnalysis { fit, thermometry })
}
