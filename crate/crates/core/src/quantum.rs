//! Linearized quantum Langevin spectra in the rotating-wave approximation:
//! scattering elements, the detected photocurrent spectrum, the motional sideband
//! Lorentzians and the optomechanically induced transparency response.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{non_negative, positive, Error, Result};
use crate::model::{CavityParams, DriveState};
use crate::sideband::unit_lorentzian;
use crate::spectrum::{FrequencyGrid, Sidedness, Spectrum};
use crate::units::HBAR;

/// Relative tolerance for "drive sits on the red sideband".
pub const RED_SIDEBAND_TOLERANCE: f64 = 1e-6;
/// Above G/κ = 1/4 the weak-coupling expressions start to fail.
pub const WEAK_COUPLING_LIMIT: f64 = 0.25;

/// Drive-linearized optomechanical system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedSystem {
    pub cavity: CavityParams,
    /// Bare mechanical frequency, rad/s.
    pub omega_m: f64,
    /// Intrinsic damping at this operating point, rad/s.
    pub gamma_i: f64,
    pub g: f64,
    pub drive: DriveState,
    /// Shift ω_m by the weak-coupling optical spring.
    pub optical_spring: bool,
}

impl LinearizedSystem {
    pub fn new(
        cavity: CavityParams,
        omega_m: f64,
        gamma_i: f64,
        g: f64,
        drive: DriveState,
    ) -> Result<Self> {
        positive("omega_m", omega_m)?;
        positive("gamma_i", gamma_i)?;
        non_negative("g", g)?;
        Ok(Self {
            cavity,
            omega_m,
            gamma_i,
            g,
            drive,
            optical_spring: false,
        })
    }

    pub fn with_optical_spring(self, on: bool) -> Self {
        Self {
            optical_spring: on,
            ..self
        }
    }

    /// G = g·|α₀|.
    pub fn enhanced_coupling(&self) -> f64 {
        self.g * self.drive.alpha_0.norm()
    }

    /// 4G²/κ.
    pub fn gamma_om(&self) -> f64 {
        let gg = self.enhanced_coupling();
        4.0 * gg * gg / self.cavity.kappa()
    }

    pub fn gamma_total(&self) -> f64 {
        self.gamma_i + self.gamma_om()
    }

    pub fn cooperativity(&self) -> f64 {
        self.gamma_om() / self.gamma_i
    }

    pub fn spring_shift(&self) -> f64 {
        let gg = self.enhanced_coupling();
        let k2 = self.cavity.kappa() * self.cavity.kappa() / 4.0;
        let d = self.drive.detuning;
        let (a, b) = (d - self.omega_m, d + self.omega_m);
        gg * gg * (a / (a * a + k2) + b / (b * b + k2))
    }

    /// Mechanical frequency seen by the spectra.
    pub fn effective_omega_m(&self) -> f64 {
        if self.optical_spring {
            self.omega_m + self.spring_shift()
        } else {
            self.omega_m
        }
    }

    fn require_red_sideband(&self) -> Result<()> {
        if ((self.drive.detuning - self.omega_m) / self.omega_m).abs() > RED_SIDEBAND_TOLERANCE {
            return Err(Error::Invalid {
                name: "detuning",
                reason: format!(
                    "the rotating-wave spectra need the drive on the red sideband (detuning {} rad/s, omega_m {} rad/s)",
                    self.drive.detuning, self.omega_m
                ),
            });
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let ratio = self.enhanced_coupling() / self.cavity.kappa();
        if ratio > WEAK_COUPLING_LIMIT {
            w.push(format!(
                "G/kappa = {ratio:.3} is not in the weak-coupling regime"
            ));
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringElements {
    pub grid: FrequencyGrid,
    pub s11: Vec<Complex64>,
    pub n_opt: Vec<Complex64>,
    pub s12: Vec<Complex64>,
    /// s12 evaluated at −ω.
    pub s12_mirror: Vec<Complex64>,
    /// G, rad/s.
    pub enhanced_coupling: f64,
    pub gamma_i: f64,
    pub gamma: f64,
    pub omega_m: f64,
    pub kappa: f64,
    pub kappa_e: f64,
    pub omega_o: f64,
    pub p_in: f64,
    pub warnings: Vec<String>,
}

pub fn scattering_elements(
    sys: &LinearizedSystem,
    grid: &FrequencyGrid,
) -> Result<ScatteringElements> {
    sys.require_red_sideband()?;
    let kappa = sys.cavity.kappa();
    let k_e = sys.cavity.kappa_e();
    let k_p = sys.cavity.kappa_prime();
    let gg = sys.enhanced_coupling();
    let gamma = sys.gamma_total();
    let wm = sys.effective_omega_m();
    let g4k = 4.0 * gg * gg / kappa;
    let mech = |w: f64| Complex64::new(gamma / 2.0, wm - w);
    let s12_at =
        |w: f64| Complex64::i() * gg * (2.0 * sys.gamma_i * k_e / (kappa * kappa)).sqrt() / mech(w);

    let n = grid.len();
    let (mut s11, mut n_opt, mut s12, mut s12_mirror) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for w in grid.omegas() {
        s11.push(Complex64::from(1.0 - k_e / kappa) + g4k * (k_e / (2.0 * kappa)) / mech(w));
        n_opt.push(
            Complex64::from(-(2.0 * k_p * k_e / (kappa * kappa)).sqrt())
                + g4k * (k_p * k_e / (2.0 * kappa * kappa)).sqrt() / mech(w),
        );
        s12.push(s12_at(w));
        s12_mirror.push(s12_at(-w));
    }
    Ok(ScatteringElements {
        grid: *grid,
        s11,
        n_opt,
        s12,
        s12_mirror,
        enhanced_coupling: gg,
        gamma_i: sys.gamma_i,
        gamma,
        omega_m: wm,
        kappa,
        kappa_e: k_e,
        omega_o: sys.cavity.omega_o(),
        p_in: sys.drive.p_in,
        warnings: sys.warnings(),
    })
}

impl ScatteringElements {
    /// |s11|² + |n_opt|² + |s12|² at each grid point.
    pub fn unitarity_sum(&self) -> Vec<f64> {
        self.s11
            .iter()
            .zip(&self.n_opt)
            .zip(&self.s12)
            .map(|((a, b), c)| a.norm_sqr() + b.norm_sqr() + c.norm_sqr())
            .collect()
    }
}

/// Normalized photocurrent spectrum; the shot-noise background is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotocurrentPsd {
    pub spectrum: Spectrum,
    /// γ_i·n_b/γ, the occupancy encoded by the Lorentzian area.
    pub n_bar: f64,
    pub gamma: f64,
    pub gamma_i: f64,
    pub omega_m: f64,
    /// Converts the normalized excess into detected optical power squared per Hz:
    /// 4ħω_o·P_in, W².
    pub power_scale: f64,
}

impl PhotocurrentPsd {
    /// Area of (S_II − 1) over Hz predicted in closed form.
    pub fn excess_area(&self, kappa: f64, kappa_e: f64, enhanced_coupling: f64) -> f64 {
        (kappa_e / (2.0 * kappa))
            * (4.0 * enhanced_coupling * enhanced_coupling / kappa)
            * self.n_bar
    }
}

pub fn photocurrent_psd(elements: &ScatteringElements, n_b: f64) -> Result<PhotocurrentPsd> {
    non_negative("n_b", n_b)?;
    let values = elements
        .s12
        .iter()
        .zip(&elements.s12_mirror)
        .map(|(a, b)| 1.0 + n_b * (a.norm_sqr() + b.norm_sqr()))
        .collect();
    Ok(PhotocurrentPsd {
        spectrum: Spectrum::new(elements.grid, values, "1", Sidedness::Single)?,
        n_bar: elements.gamma_i * n_b / elements.gamma,
        gamma: elements.gamma,
        gamma_i: elements.gamma_i,
        omega_m: elements.omega_m,
        power_scale: 4.0 * HBAR * elements.omega_o * elements.p_in,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sideband {
    Red,
    Blue,
}

/// Motional sideband Lorentzian in quanta per Hz. The red line has width γ_i(1+C)
/// and weight n̄; the blue line has width γ_i(1−C) and weight n̄+1.
pub fn sb_lorentzians(
    n_bar: f64,
    gamma_i: f64,
    cooperativity: f64,
    omega_m: f64,
    grid: &FrequencyGrid,
    side: Sideband,
) -> Result<Spectrum> {
    non_negative("n_bar", n_bar)?;
    positive("gamma_i", gamma_i)?;
    non_negative("cooperativity", cooperativity)?;
    let (gamma, weight) = match side {
        Sideband::Red => (gamma_i * (1.0 + cooperativity), n_bar),
        Sideband::Blue => {
            if cooperativity >= 1.0 {
                return Err(Error::OutOfRange {
                    name: "cooperativity",
                    value: cooperativity,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
            (gamma_i * (1.0 - cooperativity), n_bar + 1.0)
        }
    };
    Ok(Spectrum::from_fn(*grid, "1/Hz", Sidedness::Single, |w| {
        weight * unit_lorentzian(w - omega_m, gamma)
    }))
}

/// Probe reflection lineshape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectionModel {
    /// Bare cavity response times the mechanical filter (iδ+γ_i/2)/(iδ+γ/2),
    /// matching the rotating-wave s11.
    #[default]
    Factorized,
    /// (κ_e/2)/(i(Δ−ω)+κ/2+G²/(iδ+γ_i/2)).
    FullWeakCoupling,
}

/// Reflection coefficient and d ln r/dω at two-photon detuning `w` (rad/s).
fn reflection_with_log_derivative(
    sys: &LinearizedSystem,
    w: f64,
    model: ReflectionModel,
) -> (Complex64, Complex64) {
    let kappa = sys.cavity.kappa();
    let gg = sys.enhanced_coupling();
    let i = Complex64::i();
    let cav = Complex64::new(kappa / 2.0, sys.drive.detuning - w);
    let mech_i = Complex64::new(sys.gamma_i / 2.0, sys.effective_omega_m() - w);
    let pre = sys.cavity.kappa_e() / 2.0;
    match model {
        ReflectionModel::Factorized => {
            let mech = Complex64::new(sys.gamma_total() / 2.0, sys.effective_omega_m() - w);
            let r = pre / cav * mech_i / mech;
            (r, i / cav - i / mech_i + i / mech)
        }
        ReflectionModel::FullWeakCoupling => {
            let f = cav + gg * gg / mech_i;
            let df = -i + gg * gg * i / (mech_i * mech_i);
            (pre / f, -df / f)
        }
    }
}

pub fn reflection_coefficient(
    sys: &LinearizedSystem,
    two_photon_detuning: f64,
    model: ReflectionModel,
) -> Complex64 {
    reflection_with_log_derivative(sys, two_photon_detuning, model).0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EitSpectrum {
    /// Two-photon detuning grid.
    pub grid: FrequencyGrid,
    /// |r|².
    pub reflection: Vec<f64>,
    /// arg r, rad.
    pub phase: Vec<f64>,
    /// d arg r/dω_s, s. Negative values are an advance.
    pub group_delay: Vec<f64>,
    /// d arg(1−r)/dω_s of the transmitted probe, s.
    pub transmission_delay: Vec<f64>,
    /// |r/r_bare|², the reflection normalized by the bare cavity response.
    pub normalized: Vec<f64>,
    /// Full width at half depth of the normalized dip, rad/s.
    pub dip_width: Option<f64>,
    pub dip_center: Option<f64>,
    /// Minimum of the normalized reflection.
    pub dip_depth: f64,
}

pub fn eit_reflection(
    sys: &LinearizedSystem,
    grid: &FrequencyGrid,
    model: ReflectionModel,
) -> Result<EitSpectrum> {
    if !sys.drive.detuning.is_finite() || sys.drive.detuning <= 0.0 {
        return Err(Error::Invalid {
            name: "detuning",
            reason: "the control beam must be red-detuned".into(),
        });
    }
    if !grid.contains_omega(sys.effective_omega_m()) {
        return Err(Error::Invalid {
            name: "grid",
            reason: "two-photon detuning grid must contain the mechanical frequency".into(),
        });
    }
    let kappa = sys.cavity.kappa();
    let n = grid.len();
    let mut out = EitSpectrum {
        grid: *grid,
        reflection: Vec::with_capacity(n),
        phase: Vec::with_capacity(n),
        group_delay: Vec::with_capacity(n),
        transmission_delay: Vec::with_capacity(n),
        normalized: Vec::with_capacity(n),
        dip_width: None,
        dip_center: None,
        dip_depth: 1.0,
    };
    for w in grid.omegas() {
        let (r, dlog) = reflection_with_log_derivative(sys, w, model);
        let bare =
            (sys.cavity.kappa_e() / 2.0) / Complex64::new(kappa / 2.0, sys.drive.detuning - w);
        let t = Complex64::from(1.0) - r;
        out.reflection.push(r.norm_sqr());
        out.phase.push(r.arg());
        out.group_delay.push(dlog.im);
        out.transmission_delay.push((-(r * dlog) / t).im);
        out.normalized.push((r / bare).norm_sqr());
    }
    measure_dip(&mut out);
    Ok(out)
}

fn measure_dip(spec: &mut EitSpectrum) {
    let v = &spec.normalized;
    let (imin, vmin) =
        v.iter().copied().enumerate().fold(
            (0, f64::INFINITY),
            |b, (i, x)| if x < b.1 { (i, x) } else { b },
        );
    spec.dip_depth = vmin;
    if 1.0 - vmin < 1e-9 {
        return;
    }
    let level = 0.5 * (1.0 + vmin);
    let grid = spec.grid;
    let cross = |a: usize, b: usize| {
        let (wa, wb) = (grid.omega(a), grid.omega(b));
        wa + (level - v[a]) * (wb - wa) / (v[b] - v[a])
    };
    let left = (1..=imin)
        .rev()
        .find(|&i| v[i - 1] >= level)
        .map(|i| cross(i - 1, i));
    let right = (imin..v.len() - 1)
        .find(|&i| v[i + 1] >= level)
        .map(|i| cross(i, i + 1));
    spec.dip_center = Some(parabolic_vertex(&grid, v, imin));
    if let (Some(l), Some(r)) = (left, right) {
        spec.dip_width = Some(r - l);
    }
}

fn parabolic_vertex(grid: &FrequencyGrid, v: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= v.len() {
        return grid.omega(i);
    }
    let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom.abs() < f64::MIN_POSITIVE {
        return grid.omega(i);
    }
    grid.omega(i) + 0.5 * (a - c) / denom * 2.0 * PI * grid.step_hz()
}
