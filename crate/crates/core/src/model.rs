//! Device parameters and the closed-form cooling and coherence figures.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{finite, non_negative, positive, Error, Result};
use crate::units::{HBAR, K_B};

/// Optical mode: resonance ω_o, total loss rate κ and extrinsic coupling κ_e.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    omega_o: f64,
    kappa: f64,
    kappa_e: f64,
}

impl CavityParams {
    pub fn new(omega_o: f64, kappa: f64, kappa_e: f64) -> Result<Self> {
        positive("omega_o", omega_o)?;
        positive("kappa", kappa)?;
        positive("kappa_e", kappa_e)?;
        if kappa_e > 2.0 * kappa {
            return Err(Error::Invalid {
                name: "kappa_e",
                reason: format!("must not exceed 2*kappa ({kappa_e} > {})", 2.0 * kappa),
            });
        }
        Ok(Self {
            omega_o,
            kappa,
            kappa_e,
        })
    }

    /// Builds the cavity and checks a quoted optical Q against ω_o/κ to 1%.
    pub fn with_quality(omega_o: f64, kappa: f64, kappa_e: f64, q_o: f64) -> Result<Self> {
        let cav = Self::new(omega_o, kappa, kappa_e)?;
        check_within("Q_o", cav.q_o(), q_o, 0.01)?;
        Ok(cav)
    }

    pub fn omega_o(&self) -> f64 {
        self.omega_o
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn kappa_e(&self) -> f64 {
        self.kappa_e
    }
    /// Loss channels that are not detected: κ' = κ − κ_e/2.
    pub fn kappa_prime(&self) -> f64 {
        self.kappa - self.kappa_e / 2.0
    }
    pub fn q_o(&self) -> f64 {
        self.omega_o / self.kappa
    }
    /// κ_e/κ.
    pub fn coupling_ratio(&self) -> f64 {
        self.kappa_e / self.kappa
    }
}

/// Mechanical mode. The zero-point amplitude is derived from the motional mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechParams {
    omega_m: f64,
    gamma_i0: f64,
    mass: f64,
}

impl MechParams {
    pub fn new(omega_m: f64, gamma_i0: f64, mass: f64) -> Result<Self> {
        positive("omega_m", omega_m)?;
        positive("gamma_i0", gamma_i0)?;
        positive("mass", mass)?;
        Ok(Self {
            omega_m,
            gamma_i0,
            mass,
        })
    }

    /// Builds the mode and checks a quoted Q_m against ω_m/γ_i⁰ to 1%.
    pub fn with_quality(omega_m: f64, gamma_i0: f64, mass: f64, q_m: f64) -> Result<Self> {
        let m = Self::new(omega_m, gamma_i0, mass)?;
        check_within("Q_m", m.q_m(), q_m, 0.01)?;
        Ok(m)
    }

    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }
    pub fn gamma_i0(&self) -> f64 {
        self.gamma_i0
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn q_m(&self) -> f64 {
        self.omega_m / self.gamma_i0
    }
    pub fn x_zpf(&self) -> f64 {
        (HBAR / (2.0 * self.mass * self.omega_m)).sqrt()
    }
}

fn check_within(name: &'static str, derived: f64, quoted: f64, rel: f64) -> Result<()> {
    positive(name, quoted)?;
    if ((derived - quoted) / quoted).abs() > rel {
        return Err(Error::Invalid {
            name,
            reason: format!(
                "quoted value {quoted} disagrees with derived {derived} by more than {}%",
                rel * 100.0
            ),
        });
    }
    Ok(())
}

/// Coherent drive of the optical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveState {
    /// Δ = ω_o − ω_l, rad/s.
    pub detuning: f64,
    /// Input power at the device, W.
    pub p_in: f64,
    /// Input photon flux, 1/s.
    pub n_in: f64,
    /// Intracavity photon number.
    pub n_c: f64,
    pub alpha_0: Complex64,
}

/// Steady-state intracavity field for power `p_in` at detuning Δ.
pub fn intracavity_state(p_in: f64, detuning: f64, cavity: &CavityParams) -> Result<DriveState> {
    non_negative("p_in", p_in)?;
    finite("detuning", detuning)?;
    let n_in = p_in / (HBAR * cavity.omega_o());
    let denom = Complex64::new(cavity.kappa() / 2.0, detuning);
    let alpha_0 = -(cavity.kappa_e() / 2.0).sqrt() * n_in.sqrt() / denom;
    Ok(DriveState {
        detuning,
        p_in,
        n_in,
        n_c: alpha_0.norm_sqr(),
        alpha_0,
    })
}

/// Input power that produces `n_c` intracavity photons at detuning Δ.
pub fn input_power_for_photons(n_c: f64, detuning: f64, cavity: &CavityParams) -> Result<f64> {
    non_negative("n_c", n_c)?;
    finite("detuning", detuning)?;
    let lorentz = detuning * detuning + cavity.kappa() * cavity.kappa() / 4.0;
    let n_in = n_c * lorentz / (cavity.kappa_e() / 2.0);
    Ok(n_in * HBAR * cavity.omega_o())
}

/// Drive state holding `n_c` photons at detuning Δ.
pub fn drive_for_photons(n_c: f64, detuning: f64, cavity: &CavityParams) -> Result<DriveState> {
    intracavity_state(
        input_power_for_photons(n_c, detuning, cavity)?,
        detuning,
        cavity,
    )
}

/// Thermal bath seen by the mechanical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathState {
    pub t_b: f64,
    pub n_b: f64,
}

impl BathState {
    pub fn new(t_b: f64, omega_m: f64) -> Result<Self> {
        non_negative("t_b", t_b)?;
        positive("omega_m", omega_m)?;
        Ok(Self {
            t_b,
            n_b: thermal_occupancy(t_b, omega_m),
        })
    }

    /// Bath temperature that corresponds to occupancy `n_b`.
    pub fn from_occupancy(n_b: f64, omega_m: f64) -> Result<Self> {
        non_negative("n_b", n_b)?;
        positive("omega_m", omega_m)?;
        Ok(Self {
            t_b: n_b * HBAR * omega_m / K_B,
            n_b,
        })
    }
}

/// High-temperature occupancy k_B·T/(ħω_m).
pub fn thermal_occupancy(t_b: f64, omega_m: f64) -> f64 {
    K_B * t_b / (HBAR * omega_m)
}

/// Optomechanical damping on the red sideband, 4g²n_c/κ.
pub fn backaction_rate(g: f64, n_c: f64, kappa: f64) -> Result<f64> {
    non_negative("g", g)?;
    non_negative("n_c", n_c)?;
    positive("kappa", kappa)?;
    Ok(4.0 * g * g * n_c / kappa)
}

/// Photon number at which γ_OM equals γ_i.
pub fn photons_for_cooperativity(
    cooperativity: f64,
    g: f64,
    gamma_i: f64,
    kappa: f64,
) -> Result<f64> {
    non_negative("cooperativity", cooperativity)?;
    positive("g", g)?;
    positive("gamma_i", gamma_i)?;
    positive("kappa", kappa)?;
    Ok(cooperativity * gamma_i * kappa / (4.0 * g * g))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingResult {
    pub gamma_i: f64,
    pub gamma_om: f64,
    pub gamma_total: f64,
    pub cooperativity: f64,
    /// n_b/(1+C) + n_min.
    pub n_bar: f64,
    /// γ_i·n_b/(γ_i+γ_OM), i.e. `n_bar` without the quantum back-action floor.
    pub n_bar_no_floor: f64,
    pub n_min: f64,
}

pub fn cooled_occupancy(
    n_b: f64,
    gamma_i: f64,
    gamma_om: f64,
    kappa: f64,
    omega_m: f64,
) -> Result<CoolingResult> {
    non_negative("n_b", n_b)?;
    positive("gamma_i", gamma_i)?;
    non_negative("gamma_om", gamma_om)?;
    positive("kappa", kappa)?;
    positive("omega_m", omega_m)?;
    let cooperativity = gamma_om / gamma_i;
    let n_min = minimum_occupancy(kappa, omega_m);
    let n_bar_no_floor = gamma_i * n_b / (gamma_i + gamma_om);
    Ok(CoolingResult {
        gamma_i,
        gamma_om,
        gamma_total: gamma_i + gamma_om,
        cooperativity,
        n_bar: n_b / (1.0 + cooperativity) + n_min,
        n_bar_no_floor,
        n_min,
    })
}

/// Quantum back-action limit (κ/4ω_m)².
pub fn minimum_occupancy(kappa: f64, omega_m: f64) -> f64 {
    let r = kappa / (4.0 * omega_m);
    r * r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoherence {
    /// Thermal decoherence time, s.
    pub tau: f64,
    /// Coherent oscillations within τ.
    pub n_osc: f64,
}

pub fn decoherence_figures(t_b: f64, q_m: f64, omega_m: f64) -> Result<Decoherence> {
    positive("t_b", t_b)?;
    non_negative("q_m", q_m)?;
    non_negative("omega_m", omega_m)?;
    let tau = HBAR * q_m / (K_B * t_b);
    Ok(Decoherence {
        tau,
        n_osc: tau * omega_m / (2.0 * PI),
    })
}

/// Extrinsic coupling from the on-resonance transmission contrast, undercoupled root.
pub fn kappa_e_from_contrast(contrast: f64, kappa: f64) -> Result<f64> {
    finite("contrast", contrast)?;
    positive("kappa", kappa)?;
    if !(0.0..1.0).contains(&contrast) {
        return Err(Error::OutOfRange {
            name: "contrast",
            value: contrast,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(kappa * (1.0 - (1.0 - contrast).sqrt()))
}

/// Everything that defines the device and its environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub cavity: CavityParams,
    pub mech: MechParams,
    /// Single-photon coupling rate, rad/s.
    pub g: f64,
    pub bath: BathState,
}

impl SystemParams {
    pub fn new(cavity: CavityParams, mech: MechParams, g: f64, t_b: f64) -> Result<Self> {
        non_negative("g", g)?;
        Ok(Self {
            cavity,
            mech,
            g,
            bath: BathState::new(t_b, mech.omega_m())?,
        })
    }

    /// Device parameters quoted for the silicon optomechanical crystal:
    /// ω_o/2π = 195 THz, κ/2π = 500 MHz, 25% contrast, ω_m/2π = 3.68 GHz,
    /// γ_i/2π = 35 kHz, g/2π = 910 kHz, T_b = 17.6 K. The mass is a placeholder.
    pub fn reference_device() -> Self {
        use crate::units::hz_to_rad;
        let kappa = hz_to_rad(500e6);
        let kappa_e = kappa_e_from_contrast(0.25, kappa).expect("valid contrast");
        let cavity = CavityParams::new(hz_to_rad(195e12), kappa, kappa_e).expect("valid cavity");
        let mech =
            MechParams::new(hz_to_rad(3.68e9), hz_to_rad(35e3), 311e-18).expect("valid mechanics");
        Self::new(cavity, mech, hz_to_rad(910e3), 17.6).expect("valid system")
    }
}
