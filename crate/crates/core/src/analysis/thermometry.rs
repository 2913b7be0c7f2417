use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::calibration::CalibrationRecord;
use super::fit::LorentzFit;
use crate::error::{positive, Error, Result};
use crate::model::BathState;
use crate::spectrum::Spectrum;
use crate::units::HBAR;

pub const MONTE_CARLO_DRAWS: usize = 10_000;
const MONTE_CARLO_SEED: u64 = 0x5eed_7e4a;

/// A value with its absolute 1σ uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

impl Measured {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }

    pub fn relative(value: f64, rel: f64) -> Self {
        Self {
            value,
            sigma: (value * rel).abs(),
        }
    }

    pub fn rel(&self) -> f64 {
        self.sigma / self.value.abs()
    }
}

/// Independently characterized device parameters, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemEstimate {
    pub omega_o: Measured,
    pub kappa: Measured,
    pub kappa_e: Measured,
    /// Laser detuning from the optical mode (positive on the red side).
    pub detuning: Measured,
    pub gamma_i: Measured,
}

/// Every quantity that enters the occupancy estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputLedger {
    pub omega_o: Measured,
    pub kappa: Measured,
    pub kappa_e: Measured,
    pub detuning: Measured,
    pub omega_m: Measured,
    pub gamma: Measured,
    pub gamma_i: Measured,
    pub p_in: Measured,
    /// Integrated sideband power at the spectrum analyzer, W.
    pub p_rsa: Measured,
    /// Cavity-referred conversion gain G²/(2R_L), V²/(W²·Ω).
    pub gain: f64,
}

impl InputLedger {
    fn entries(&self) -> [(&'static str, Measured); 9] {
        [
            ("omega_o", self.omega_o),
            ("kappa", self.kappa),
            ("kappa_e", self.kappa_e),
            ("detuning", self.detuning),
            ("omega_m", self.omega_m),
            ("gamma", self.gamma),
            ("gamma_i", self.gamma_i),
            ("p_in", self.p_in),
            ("p_rsa", self.p_rsa),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in self.entries() {
            if !m.value.is_finite() {
                return Err(Error::NonFinite {
                    name,
                    value: m.value,
                });
            }
            if !(m.sigma.is_finite() && m.sigma >= 0.0) {
                return Err(Error::Invalid {
                    name,
                    reason: format!("uncertainty missing or negative: {}", m.sigma),
                });
            }
        }
        positive("gain", self.gain)?;
        Ok(())
    }

    fn values(&self) -> [f64; 9] {
        self.entries().map(|(_, m)| m.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    /// Quadrature-sum relative uncertainty.
    pub analytic: f64,
    /// Relative standard deviation over the Monte-Carlo draws.
    pub monte_carlo: f64,
    pub draws: usize,
    /// Relative standard deviation of the inferred bath temperature.
    pub bath_temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermometryResult {
    pub n_bar: f64,
    pub n_bar_sigma: f64,
    /// Bath temperature from n_b = n̄·γ/γ_i, K.
    pub t_b: f64,
    pub t_b_sigma: f64,
    pub uncertainty: UncertaintyReport,
    pub ledger: InputLedger,
}

/// n̄ from the ledger values: ω_o, κ, κ_e, Δ, ω_m, γ, γ_i, P_in, P_RSA, gain.
pub fn occupancy_formula(v: &[f64; 9], gain: f64) -> f64 {
    let [omega_o, kappa, kappa_e, detuning, omega_m, gamma, gamma_i, p_in, p_rsa] = *v;
    let d = (detuning - omega_m).powi(2) + (kappa / 2.0).powi(2);
    p_rsa / (gain * HBAR * omega_o) / (kappa * (gamma - gamma_i)) * d / (kappa_e / 2.0 * p_in)
}

fn bath_occupancy(v: &[f64; 9], gain: f64) -> f64 {
    occupancy_formula(v, gain) * v[5] / v[6]
}

pub fn subtract_background(signal: &Spectrum, background: &Spectrum) -> Result<Spectrum> {
    signal.check_compatible(background)?;
    let values = signal
        .values
        .iter()
        .zip(&background.values)
        .map(|(s, b)| s - b)
        .collect();
    Spectrum::new(signal.grid, values, signal.unit.clone(), signal.sidedness)
}

/// Mean of low-power red and blue linewidths.
pub fn intrinsic_linewidth(gamma_red: f64, gamma_blue: f64) -> Result<f64> {
    positive("gamma_red", gamma_red)?;
    if gamma_blue.is_nan() || gamma_blue <= 0.0 {
        return Err(Error::Invalid {
            name: "gamma_blue",
            reason: format!("{gamma_blue} ≤ 0: blue-detuned drive above the lasing threshold"),
        });
    }
    Ok((gamma_red + gamma_blue) / 2.0)
}

pub fn phonon_number(
    fit: &LorentzFit,
    record: &CalibrationRecord,
    system: &SystemEstimate,
) -> Result<ThermometryResult> {
    let losses = record.insertion_losses()?;
    let g = record.electronic_gain() * losses.l_1 * record.g_edfa;
    let p_in = record.p_0 * losses.l_0;
    let ledger = InputLedger {
        omega_o: system.omega_o,
        kappa: system.kappa,
        kappa_e: system.kappa_e,
        detuning: system.detuning,
        omega_m: Measured::new(fit.omega_m, fit.std(1)),
        gamma: Measured::new(fit.gamma, fit.std(2)),
        gamma_i: system.gamma_i,
        p_in: Measured::relative(p_in, losses.input_power_uncertainty),
        p_rsa: Measured::new(fit.integrated_power, fit.integrated_power_std),
        gain: g * g / (2.0 * record.load),
    };
    thermometry_from_ledger(ledger)
}

pub fn thermometry_from_ledger(ledger: InputLedger) -> Result<ThermometryResult> {
    ledger.validate()?;
    if ledger.gamma.value.partial_cmp(&ledger.gamma_i.value) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Invalid {
            name: "gamma",
            reason: format!(
                "total linewidth {} does not exceed intrinsic {}: no back-action cooling to infer",
                ledger.gamma.value, ledger.gamma_i.value
            ),
        });
    }
    let v = ledger.values();
    let n_bar = occupancy_formula(&v, ledger.gain);
    if !(n_bar.is_finite() && n_bar > 0.0) {
        return Err(Error::Invalid {
            name: "n_bar",
            reason: format!("{n_bar}"),
        });
    }
    let omega_m = ledger.omega_m.value;
    let t_b = BathState::from_occupancy(bath_occupancy(&v, ledger.gain), omega_m)?.t_b;
    let mut result = ThermometryResult {
        n_bar,
        n_bar_sigma: 0.0,
        t_b,
        t_b_sigma: 0.0,
        uncertainty: UncertaintyReport {
            analytic: 0.0,
            monte_carlo: 0.0,
            draws: 0,
            bath_temperature: 0.0,
        },
        ledger,
    };
    result.uncertainty = phonon_uncertainty(&result)?;
    result.n_bar_sigma = n_bar * result.uncertainty.analytic;
    result.t_b_sigma = t_b * result.uncertainty.bath_temperature;
    Ok(result)
}

fn analytic_relative(l: &InputLedger) -> f64 {
    let kappa = l.kappa.value;
    let dm = l.detuning.value - l.omega_m.value;
    let d = dm * dm + (kappa / 2.0).powi(2);
    let excess = l.gamma.value - l.gamma_i.value;
    let c_kappa = (kappa / 2.0) / d - 1.0 / kappa;
    let c_det = 2.0 * dm / d;
    [
        l.omega_o.rel(),
        l.kappa_e.rel(),
        l.p_in.rel(),
        l.p_rsa.rel(),
        l.gamma_i.sigma / excess,
        l.gamma.sigma / excess,
        c_kappa * l.kappa.sigma,
        c_det * l.detuning.sigma,
        c_det * l.omega_m.sigma,
    ]
    .iter()
    .map(|x| x * x)
    .sum::<f64>()
    .sqrt()
}

fn relative_std(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt() / mean.abs()
}

/// Quadrature-sum and Monte-Carlo relative uncertainty of n̄.
pub fn phonon_uncertainty(result: &ThermometryResult) -> Result<UncertaintyReport> {
    let l = &result.ledger;
    l.validate()?;
    let analytic = analytic_relative(l);
    let sigmas = l.entries().map(|(_, m)| m.sigma);
    let values = l.values();
    let mut rng = ChaCha20Rng::seed_from_u64(MONTE_CARLO_SEED);
    let mut n = Vec::with_capacity(MONTE_CARLO_DRAWS);
    let mut nb = Vec::with_capacity(MONTE_CARLO_DRAWS);
    for _ in 0..MONTE_CARLO_DRAWS {
        let mut v = values;
        for (x, s) in v.iter_mut().zip(sigmas) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x += s * z;
        }
        n.push(occupancy_formula(&v, l.gain));
        nb.push(bath_occupancy(&v, l.gain));
    }
    Ok(UncertaintyReport {
        analytic,
        monte_carlo: relative_std(&n),
        draws: MONTE_CARLO_DRAWS,
        bath_temperature: relative_std(&nb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::hz_to_rad;
    use approx::assert_relative_eq;

    fn reference_ledger(scale: f64) -> InputLedger {
        let omega_m = hz_to_rad(3.68e9);
        let gamma_i = hz_to_rad(35e3);
        InputLedger {
            omega_o: Measured::relative(hz_to_rad(195.0e12), 0.007 * scale),
            kappa: Measured::relative(hz_to_rad(0.9e9), 0.007 * scale),
            kappa_e: Measured::relative(hz_to_rad(0.12e9), 0.007 * scale),
            detuning: Measured::relative(omega_m, 0.003 * scale),
            omega_m: Measured::relative(omega_m, 1e-7 * scale),
            gamma: Measured::relative(hz_to_rad(300e3), 0.006 * scale),
            gamma_i: Measured::relative(gamma_i, 0.016 * scale),
            p_in: Measured::relative(1e-4, 0.04 * scale),
            p_rsa: Measured::relative(1e-12, 0.006 * scale),
            gain: 1.0,
        }
    }

    #[test]
    fn zero_uncertainty() {
        let r = thermometry_from_ledger(reference_ledger(0.0)).unwrap();
        assert_eq!(r.uncertainty.analytic, 0.0);
        assert!(r.uncertainty.monte_carlo < 1e-12);
    }

    #[test]
    fn reference_error_budget() {
        let r = thermometry_from_ledger(reference_ledger(1.0)).unwrap();
        assert!(
            (0.04..0.048).contains(&r.uncertainty.analytic),
            "{}",
            r.uncertainty.analytic
        );
        assert!((r.uncertainty.monte_carlo / r.uncertainty.analytic - 1.0).abs() < 0.15);
    }

    #[test]
    fn dominant_two_terms() {
        let mut l = reference_ledger(0.0);
        l.p_in = Measured::relative(l.p_in.value, 0.04);
        l.gamma_i.sigma = 0.016 * l.gamma_i.value;
        let excess = l.gamma.value - l.gamma_i.value;
        let r = thermometry_from_ledger(l).unwrap();
        assert_relative_eq!(
            r.uncertainty.analytic,
            (0.04f64.powi(2) + (l.gamma_i.sigma / excess).powi(2)).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn no_backaction_rejected() {
        let mut l = reference_ledger(1.0);
        l.gamma.value = l.gamma_i.value;
        assert!(thermometry_from_ledger(l).is_err());
    }

    #[test]
    fn linewidth_mean() {
        let g = 35e3;
        assert_relative_eq!(
            intrinsic_linewidth(g * 1.27, g * 0.73).unwrap(),
            g,
            max_relative = 1e-15
        );
        assert!(intrinsic_linewidth(g, 0.0).is_err());
    }
}
