//! Forward model of the detection chain: gains, shot and amplifier noise, the
//! spectrum-analyzer trace and lock-in demodulation of the transparency probe.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{finite, non_negative, positive, Error, Result};
use crate::model::{CavityParams, DriveState};
use crate::quantum::PhotocurrentPsd;
use crate::spectrum::{FrequencyGrid, Sidedness, Spectrum};
use crate::units::HBAR;

/// Photodetector, electronics and amplifier gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// R_PD, A/W.
    pub responsivity: f64,
    /// G_PD, V/A.
    pub transimpedance_gain: f64,
    /// R_L, Ω.
    pub load: f64,
    /// G_e, V/W, referred to the optical power at the photodetector.
    pub electronic_gain: f64,
    /// G_EDFA, optical power gain of the pre-amplifier.
    pub edfa_gain: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            responsivity: 1.0,
            transimpedance_gain: 40_000.0,
            load: 50.0,
            electronic_gain: 40_000.0,
            edfa_gain: 100.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        positive("responsivity", self.responsivity)?;
        positive("transimpedance_gain", self.transimpedance_gain)?;
        positive("load", self.load)?;
        positive("electronic_gain", self.electronic_gain)?;
        positive("edfa_gain", self.edfa_gain)?;
        Ok(())
    }

    /// (G_e·G_EDFA)²/(2R_L): detected power PSD (W²/Hz) to analyzer reading (W/Hz).
    pub fn rsa_scale(&self) -> f64 {
        let g = self.electronic_gain * self.edfa_gain;
        g * g / (2.0 * self.load)
    }
}

/// Shot-noise amplitude spectral density √(2ħωP), W/√Hz.
pub fn shot_noise_level(p: f64, omega_l: f64) -> Result<f64> {
    non_negative("power", p)?;
    positive("omega_l", omega_l)?;
    Ok((2.0 * HBAR * omega_l * p).sqrt())
}

/// Shot noise after noise-free gain, √(2ħω·G_EDFA²G_e²·P), V/√Hz.
pub fn amplified_shot_noise_level(p: f64, omega_o: f64, detector: &DetectorParams) -> Result<f64> {
    Ok(shot_noise_level(p, omega_o)? * detector.electronic_gain * detector.edfa_gain)
}

/// Sideband and carrier as they arrive at the photodetector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedSignal {
    /// Integrated sideband power spectral density, W².
    pub p_sb: f64,
    /// Carrier power, W.
    pub p_carrier: f64,
    /// Mechanical linewidth γ, rad/s.
    pub gamma: f64,
    /// Occupancy that produced `p_sb`.
    pub n_bar: f64,
    pub omega_o: f64,
    /// Optical transmission from the cavity output to the photodetector.
    pub transmission: f64,
}

impl DetectedSignal {
    /// Signal of a red-detuned drive for occupancy `n_bar`, after transmission η.
    #[allow(clippy::too_many_arguments)]
    pub fn from_device(
        cavity: &CavityParams,
        drive: &DriveState,
        g: f64,
        omega_m: f64,
        gamma: f64,
        n_bar: f64,
        transmission: f64,
    ) -> Result<Self> {
        positive("gamma", gamma)?;
        non_negative("n_bar", n_bar)?;
        check_fraction("transmission", transmission)?;
        let hw = HBAR * cavity.omega_o();
        let kappa = cavity.kappa();
        let detune = drive.detuning - omega_m;
        let lorentz = detune * detune + kappa * kappa / 4.0;
        let p_sb =
            hw * hw * (cavity.kappa_e() / 2.0) * drive.n_in * 4.0 * g * g * drive.n_c * n_bar
                / lorentz;
        let t = Complex64::from(1.0)
            - (cavity.kappa_e() / 2.0) / Complex64::new(kappa / 2.0, drive.detuning);
        Ok(Self {
            p_sb: transmission * transmission * p_sb,
            p_carrier: transmission * drive.p_in * t.norm_sqr(),
            gamma,
            n_bar,
            omega_o: cavity.omega_o(),
            transmission,
        })
    }
}

fn check_fraction(name: &'static str, v: f64) -> Result<f64> {
    finite(name, v)?;
    if v <= 0.0 || v > 1.0 {
        return Err(Error::OutOfRange {
            name,
            value: v,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(v)
}

/// Amplitude spectral densities are V/√Hz at the analyzer input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// W/√Hz at the photodetector.
    pub s_shot: f64,
    pub s_shot_amplified: f64,
    pub s_excess: f64,
    pub s_background: f64,
    pub snr_shot: f64,
    pub snr_predicted: f64,
    /// Analyzer background in phonon units.
    pub n_imp: f64,
    pub transmission: f64,
}

impl NoiseBudget {
    /// Flat analyzer background, W/Hz.
    pub fn background_psd(&self, detector: &DetectorParams) -> f64 {
        self.s_background * self.s_background / detector.load
    }
}

/// Shot-noise and amplifier-limited signal-to-noise of the motional sideband.
///
/// The coherent sideband reaches the analyzer as (G_eG_EDFA)²/(2R_L) times its
/// detected power spectral density while broadband noise arrives as S²/R_L, so the
/// imprecision is n_imp = 2n̄/SNR_predicted.
pub fn snr_budget(
    signal: &DetectedSignal,
    detector: &DetectorParams,
    s_excess: f64,
) -> Result<NoiseBudget> {
    detector.validate()?;
    non_negative("s_excess", s_excess)?;
    if signal.gamma <= 0.0 || !signal.gamma.is_finite() {
        return Err(Error::Invalid {
            name: "gamma",
            reason: "mechanical linewidth must be positive".into(),
        });
    }
    let s_shot = shot_noise_level(signal.p_carrier, signal.omega_o)?;
    let s_amp = amplified_shot_noise_level(signal.p_carrier, signal.omega_o, detector)?;
    let g2 = (detector.electronic_gain * detector.edfa_gain).powi(2);
    let peak = 4.0 * signal.p_sb / signal.gamma;
    let shot_psd = 2.0 * HBAR * signal.omega_o * signal.p_carrier;
    let snr_shot = peak / shot_psd;
    let snr_predicted = peak / (shot_psd + s_excess * s_excess / g2);
    let n_imp = if signal.n_bar > 0.0 && snr_predicted > 0.0 {
        2.0 * signal.n_bar / snr_predicted
    } else {
        f64::INFINITY
    };
    Ok(NoiseBudget {
        s_shot,
        s_shot_amplified: s_amp,
        s_excess,
        s_background: (s_amp * s_amp + s_excess * s_excess).sqrt(),
        snr_shot,
        snr_predicted,
        n_imp,
        transmission: signal.transmission,
    })
}

/// Budget whose shot-noise floor sits `snr` below the sideband peak, obtained by
/// choosing the detected carrier power. Used to pin synthetic data at a target SNR.
pub fn budget_for_snr(
    signal: &DetectedSignal,
    detector: &DetectorParams,
    snr: f64,
) -> Result<NoiseBudget> {
    positive("snr", snr)?;
    positive("gamma", signal.gamma)?;
    positive("p_sb", signal.p_sb)?;
    let peak = 4.0 * signal.p_sb / signal.gamma;
    let p_carrier = peak / (snr * 2.0 * HBAR * signal.omega_o);
    snr_budget(
        &DetectedSignal {
            p_carrier,
            ..*signal
        },
        detector,
        0.0,
    )
}

/// Loss after the cavity and the amplifier noise figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainModel {
    /// Optical transmission from cavity output to photodetector.
    pub transmission: f64,
    /// Linear noise figure F ≥ 1 of the optical pre-amplifier.
    pub noise_figure: f64,
}

impl ChainModel {
    pub const IDEAL: ChainModel = ChainModel {
        transmission: 1.0,
        noise_figure: 1.0,
    };

    pub fn new(transmission: f64, noise_figure: f64) -> Result<Self> {
        check_fraction("transmission", transmission)?;
        finite("noise_figure", noise_figure)?;
        if noise_figure < 1.0 {
            return Err(Error::Invalid {
                name: "noise_figure",
                reason: format!("must be at least 1 (0 dB), got {noise_figure}"),
            });
        }
        Ok(Self {
            transmission,
            noise_figure,
        })
    }

    /// Excess noise √((F−1)·2ħωG²P′) added on top of amplified shot noise.
    pub fn excess_noise(
        &self,
        p_detected: f64,
        omega_o: f64,
        detector: &DetectorParams,
    ) -> Result<f64> {
        let s = amplified_shot_noise_level(p_detected, omega_o, detector)?;
        Ok(s * (self.noise_figure - 1.0).sqrt())
    }

    /// Full budget for a drive state and occupancy.
    #[allow(clippy::too_many_arguments)]
    pub fn budget(
        &self,
        cavity: &CavityParams,
        drive: &DriveState,
        g: f64,
        omega_m: f64,
        gamma: f64,
        n_bar: f64,
        detector: &DetectorParams,
    ) -> Result<NoiseBudget> {
        let sig = DetectedSignal::from_device(
            cavity,
            drive,
            g,
            omega_m,
            gamma,
            n_bar,
            self.transmission,
        )?;
        let exc = self.excess_noise(sig.p_carrier, sig.omega_o, detector)?;
        snr_budget(&sig, detector, exc)
    }
}

/// Synthetic analyzer trace plus the hidden parameters that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpectrum {
    pub spectrum: Spectrum,
    pub rng_seed: u64,
    pub stream: u64,
    pub averages: u64,
    pub truth: SpectrumTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTruth {
    pub n_bar: f64,
    pub gamma: f64,
    pub omega_m: f64,
    /// Noise-free flat background, W/Hz.
    pub background: f64,
}

/// Noise-free analyzer reading in W/Hz.
pub fn noiseless_rsa_spectrum(
    psd: &PhotocurrentPsd,
    detector: &DetectorParams,
    noise: &NoiseBudget,
) -> Spectrum {
    let scale = detector.rsa_scale() * noise.transmission * noise.transmission * psd.power_scale;
    let floor = noise.background_psd(detector);
    let values = psd
        .spectrum
        .values
        .iter()
        .map(|v| scale * (v - 1.0) + floor)
        .collect();
    Spectrum {
        grid: psd.spectrum.grid,
        values,
        unit: "W/Hz".into(),
        sidedness: Sidedness::Single,
    }
}

/// Random streams reserved per sweep point: the signal trace uses `2·index`,
/// its far-detuned background `2·index + 1`. Each stream is a ChaCha20 keystream
/// keyed by the base seed, so results do not depend on evaluation order.
pub fn stream_for(index: u64, background: bool) -> u64 {
    2 * index + u64::from(background)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Applies the averaged-periodogram statistics: each bin is the mean of `averages`
/// exponentially distributed readings, i.e. Gamma(N, mean/N).
fn apply_averaging(mean: &[f64], averages: u64, seed: u64, stream: u64) -> Result<Vec<f64>> {
    if averages == 0 {
        return Err(Error::Invalid {
            name: "averages",
            reason: "at least one average is required".into(),
        });
    }
    let n = averages as f64;
    let dist = Gamma::new(n, 1.0 / n).map_err(|e| Error::Invalid {
        name: "averages",
        reason: e.to_string(),
    })?;
    let mut rng = rng_for(seed, stream);
    Ok(mean.iter().map(|m| m * dist.sample(&mut rng)).collect())
}

pub fn synthesize_rsa_spectrum(
    psd: &PhotocurrentPsd,
    detector: &DetectorParams,
    noise: &NoiseBudget,
    seed: u64,
    stream: u64,
    averages: u64,
) -> Result<SyntheticSpectrum> {
    detector.validate()?;
    let mean = noiseless_rsa_spectrum(psd, detector, noise);
    let values = apply_averaging(&mean.values, averages, seed, stream)?;
    Ok(SyntheticSpectrum {
        spectrum: Spectrum { values, ..mean },
        rng_seed: seed,
        stream,
        averages,
        truth: SpectrumTruth {
            n_bar: psd.n_bar,
            gamma: psd.gamma,
            omega_m: psd.omega_m,
            background: noise.background_psd(detector),
        },
    })
}

/// Far-detuned background trace: the flat floor with the same averaging statistics.
pub fn synthesize_background(
    grid: &FrequencyGrid,
    detector: &DetectorParams,
    noise: &NoiseBudget,
    seed: u64,
    stream: u64,
    averages: u64,
) -> Result<Spectrum> {
    let floor = noise.background_psd(detector);
    let values = apply_averaging(&vec![floor; grid.len()], averages, seed, stream)?;
    Spectrum::new(*grid, values, "W/Hz", Sidedness::Single)
}

/// In-phase and quadrature lock-in outputs at ω_LI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockinReading {
    pub x: f64,
    pub y: f64,
    /// ω_LI < γ/2, so r is flat across the modulation sidebands.
    pub valid: bool,
}

fn lockin_prefactor(a_o: f64, beta: f64, detector: &DetectorParams) -> f64 {
    a_o * a_o * beta * beta * detector.responsivity * detector.transimpedance_gain
        / (4.0 * detector.load)
}

/// Lock-in demodulation of the amplitude-modulated probe. The envelope phase is
/// φ = ω_LI·τ for a probe delayed by τ.
pub fn lockin_demodulate(
    reflection: f64,
    delay: f64,
    a_o: f64,
    beta: f64,
    detector: &DetectorParams,
    omega_li: f64,
    gamma_total: f64,
) -> Result<LockinReading> {
    non_negative("reflection", reflection)?;
    finite("delay", delay)?;
    positive("omega_li", omega_li)?;
    let amp = lockin_prefactor(a_o, beta, detector) * reflection;
    let phi = omega_li * delay;
    Ok(LockinReading {
        x: amp * phi.cos(),
        y: amp * phi.sin(),
        valid: omega_li < gamma_total / 2.0,
    })
}

/// Inverse of [`lockin_demodulate`]: (|r|², φ, τ).
pub fn lockin_invert(
    reading: &LockinReading,
    a_o: f64,
    beta: f64,
    detector: &DetectorParams,
    omega_li: f64,
) -> Result<(f64, f64, f64)> {
    let pre = lockin_prefactor(a_o, beta, detector);
    positive("lock-in prefactor", pre)?;
    positive("omega_li", omega_li)?;
    let phi = reading.y.atan2(reading.x);
    Ok((reading.x.hypot(reading.y) / pre, phi, phi / omega_li))
}

/// Probe amplitude √(P/ħω) used by the lock-in expressions.
pub fn probe_amplitude(p: f64, omega_l: f64) -> Result<f64> {
    non_negative("power", p)?;
    positive("omega_l", omega_l)?;
    Ok((p / (HBAR * omega_l)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::hz_to_rad;
    use approx::assert_relative_eq;

    #[test]
    fn shot_noise_scaling() {
        let w = hz_to_rad(195e12);
        assert_eq!(shot_noise_level(0.0, w).unwrap(), 0.0);
        let a = shot_noise_level(1e-6, w).unwrap();
        assert_relative_eq!(
            shot_noise_level(4e-6, w).unwrap(),
            2.0 * a,
            max_relative = 1e-14
        );
        let d = DetectorParams::default();
        let amp = amplified_shot_noise_level(1e-6, w, &d).unwrap();
        let direct =
            (2.0 * HBAR * w * d.edfa_gain.powi(2) * d.electronic_gain.powi(2) * 1e-6).sqrt();
        assert_relative_eq!(amp, direct, max_relative = 1e-14);
    }

    fn signal(p_sb: f64) -> DetectedSignal {
        DetectedSignal {
            p_sb,
            p_carrier: 1e-5,
            gamma: hz_to_rad(1e6),
            n_bar: 1.0,
            omega_o: hz_to_rad(195e12),
            transmission: 1.0,
        }
    }

    #[test]
    fn ideal_amplifier_reaches_shot_limit() {
        let d = DetectorParams::default();
        let b = snr_budget(&signal(1e-20), &d, 0.0).unwrap();
        assert_eq!(b.snr_predicted, b.snr_shot);
        assert_eq!(b.s_background, b.s_shot_amplified);
        let noisy = snr_budget(&signal(1e-20), &d, b.s_shot_amplified).unwrap();
        assert!(noisy.snr_predicted < noisy.snr_shot);
        assert!(noisy.s_background > noisy.s_shot_amplified);
        let mut bad = signal(1e-20);
        bad.gamma = 0.0;
        assert!(snr_budget(&bad, &d, 0.0).is_err());
    }

    #[test]
    fn lockin_round_trip_and_phase() {
        let d = DetectorParams::default();
        let r = lockin_demodulate(0.3, 0.0, 1e6, 0.1, &d, hz_to_rad(1e5), hz_to_rad(1e6)).unwrap();
        assert_eq!(r.y, 0.0);
        let a = lockin_demodulate(0.3, 1e-7, 1e6, 0.1, &d, hz_to_rad(1e5), hz_to_rad(1e6)).unwrap();
        let b =
            lockin_demodulate(0.3, -2e-7, 1e6, 0.1, &d, hz_to_rad(1e5), hz_to_rad(1e6)).unwrap();
        assert_relative_eq!(a.x.hypot(a.y), b.x.hypot(b.y), max_relative = 1e-14);
        let (refl, _, tau) = lockin_invert(&a, 1e6, 0.1, &d, hz_to_rad(1e5)).unwrap();
        assert_relative_eq!(refl, 0.3, max_relative = 1e-12);
        assert_relative_eq!(tau, 1e-7, max_relative = 1e-12);
        let slow =
            lockin_demodulate(0.3, 0.0, 1e6, 0.1, &d, hz_to_rad(1e6), hz_to_rad(1e6)).unwrap();
        assert!(!slow.valid);
    }

    #[test]
    fn chain_noise_figure_bounds() {
        assert!(ChainModel::new(0.5, 0.9).is_err());
        assert!(ChainModel::new(1.5, 2.0).is_err());
        let c = ChainModel::new(0.6, 1.0).unwrap();
        assert_eq!(
            c.excess_noise(1e-3, 1e15, &DetectorParams::default())
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn streams_are_disjoint() {
        assert_ne!(stream_for(3, false), stream_for(3, true));
        assert_ne!(stream_for(3, true), stream_for(4, false));
        let a = apply_averaging(&[1.0; 8], 10, 1, 0).unwrap();
        let b = apply_averaging(&[1.0; 8], 10, 1, 1).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, apply_averaging(&[1.0; 8], 10, 1, 0).unwrap());
        assert!(apply_averaging(&[1.0], 0, 1, 0).is_err());
    }
}
