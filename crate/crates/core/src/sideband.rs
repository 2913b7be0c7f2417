//! Classical Fourier-sideband decomposition of the intracavity field driven by a
//! coherently oscillating mechanical mode.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{finite, positive, Error, Result};
use crate::model::{CavityParams, DriveState};
use crate::spectrum::{FrequencyGrid, Sidedness, Spectrum};
use crate::units::HBAR;

/// Largest |g·β₀|/ω_m for which the first-order sideband closed forms are trusted.
pub const RESOLVED_MODULATION_LIMIT: f64 = 1e-3;

pub const DEFAULT_ORDER: usize = 2;
const REFINEMENT_TOLERANCE: f64 = 1e-9;
const MAX_ORDER: usize = 64;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandProblem {
    pub cavity: CavityParams,
    pub drive: DriveState,
    pub g: f64,
    pub beta_0: Complex64,
    pub omega_m: f64,
    order: usize,
}

impl SidebandProblem {
    pub fn new(
        cavity: CavityParams,
        drive: DriveState,
        g: f64,
        beta_0: Complex64,
        omega_m: f64,
        order: usize,
    ) -> Result<Self> {
        finite("g", g)?;
        finite("beta_0", beta_0.norm())?;
        positive("omega_m", omega_m)?;
        if order == 0 {
            return Err(Error::Invalid {
                name: "order",
                reason: "truncation order must be at least 1".into(),
            });
        }
        Ok(Self {
            cavity,
            drive,
            g,
            beta_0,
            omega_m,
            order,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn with_order(&self, order: usize) -> Result<Self> {
        Self::new(
            self.cavity,
            self.drive,
            self.g,
            self.beta_0,
            self.omega_m,
            order,
        )
    }

    pub fn with_beta(&self, beta_0: Complex64) -> Self {
        Self { beta_0, ..*self }
    }

    /// |g·β₀|/ω_m.
    pub fn modulation_factor(&self) -> f64 {
        (self.g * self.beta_0).norm() / self.omega_m
    }

    pub fn is_resolved(&self) -> bool {
        self.modulation_factor() <= RESOLVED_MODULATION_LIMIT
    }

    fn input_amplitude(&self) -> f64 {
        self.drive.n_in.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandSolution {
    /// α_q for q = −order..=order.
    pub amplitudes: Vec<Complex64>,
    pub order: usize,
    pub condition: f64,
}

impl SidebandSolution {
    /// α_q, or zero outside the truncation.
    pub fn get(&self, q: i64) -> Complex64 {
        let idx = q + self.order as i64;
        if idx < 0 || idx as usize >= self.amplitudes.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[idx as usize]
        }
    }
}

/// Coupling matrix M and drive vector a_in of M·α = a_in.
pub fn build_coupling_matrix(
    problem: &SidebandProblem,
) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let n = 2 * problem.order + 1;
    let off = Complex64::i() * problem.g * problem.beta_0;
    let kappa = problem.cavity.kappa();
    let m = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            let p = r as f64 - problem.order as f64;
            Complex64::new(kappa / 2.0, problem.drive.detuning - p * problem.omega_m)
        } else if r.abs_diff(c) == 1 {
            off
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut rhs = DVector::zeros(n);
    rhs[problem.order] =
        Complex64::from(-(problem.cavity.kappa_e() / 2.0).sqrt() * problem.input_amplitude());
    (m, rhs)
}

/// Direct solve of the truncated system.
pub fn solve_sidebands(problem: &SidebandProblem) -> Result<SidebandSolution> {
    let (m, rhs) = build_coupling_matrix(problem);
    let sv = m.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::IllConditioned { condition })?;
    Ok(SidebandSolution {
        amplitudes: x.iter().copied().collect(),
        order: problem.order,
        condition,
    })
}

fn relative_change(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Solves at the problem's order and raises it by 2 until α_{±1} settle to 1e-9.
pub fn solve_sidebands_converged(problem: &SidebandProblem) -> Result<SidebandSolution> {
    let mut current = solve_sidebands(problem)?;
    let mut order = problem.order;
    while order < MAX_ORDER {
        order += 2;
        let next = solve_sidebands(&problem.with_order(order)?)?;
        let change = relative_change(current.get(1), next.get(1))
            .max(relative_change(current.get(-1), next.get(-1)));
        current = next;
        if change < REFINEMENT_TOLERANCE {
            return Ok(current);
        }
    }
    Err(Error::InsufficientData(format!(
        "sideband amplitudes did not settle to {REFINEMENT_TOLERANCE:e} by order {MAX_ORDER}"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSidebands {
    pub alpha_0: Complex64,
    /// Anti-Stokes amplitude at ω_l + ω_m (q = +1).
    pub alpha_plus: Complex64,
    /// Stokes amplitude at ω_l − ω_m (q = −1).
    pub alpha_minus: Complex64,
    /// False when the modulation factor exceeds the resolved-sideband limit.
    pub resolved: bool,
}

pub fn closed_form_sidebands(problem: &SidebandProblem) -> ClosedFormSidebands {
    let kappa = problem.cavity.kappa();
    let delta = problem.drive.detuning;
    let alpha_0 = -(problem.cavity.kappa_e() / 2.0).sqrt() * problem.input_amplitude()
        / Complex64::new(kappa / 2.0, delta);
    let coupling = -Complex64::i() * problem.g * problem.beta_0 * alpha_0;
    ClosedFormSidebands {
        alpha_0,
        alpha_plus: coupling / Complex64::new(kappa / 2.0, delta - problem.omega_m),
        alpha_minus: coupling / Complex64::new(kappa / 2.0, delta + problem.omega_m),
        resolved: problem.is_resolved(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandPower {
    /// Photons/s.
    pub a_cos: f64,
    pub a_sin: f64,
    /// Total beat-note power at ω_m, W.
    pub p_sb: f64,
    /// Anti-Stokes contribution alone, ħω_o·|A_+|, W.
    pub p_anti_stokes: f64,
    pub resolved: bool,
}

pub fn detected_sideband_power(problem: &SidebandProblem) -> SidebandPower {
    let cf = closed_form_sidebands(problem);
    let scale = 2.0 * (problem.cavity.kappa_e() / 2.0).sqrt() * problem.input_amplitude();
    let a_plus = scale * cf.alpha_plus;
    let a_minus = scale * cf.alpha_minus;
    // A = |A| exp(-i phi)
    let (phi_p, phi_m) = (-a_plus.arg(), -a_minus.arg());
    let a_cos = a_plus.norm() * phi_p.cos() + a_minus.norm() * phi_m.cos();
    let a_sin = a_plus.norm() * phi_p.sin() - a_minus.norm() * phi_m.sin();
    let hw = HBAR * problem.cavity.omega_o();
    SidebandPower {
        a_cos,
        a_sin,
        p_sb: hw * a_cos.hypot(a_sin),
        p_anti_stokes: hw * a_plus.norm(),
        resolved: cf.resolved,
    }
}

/// Weight of δ(ω − ω_m) in the detected power spectral density, W².
pub fn spp_prefactor(problem: &SidebandProblem) -> f64 {
    let kappa = problem.cavity.kappa();
    let delta = problem.drive.detuning;
    let hw = HBAR * problem.cavity.omega_o();
    let k_e = problem.cavity.kappa_e();
    let n_in = problem.drive.n_in;
    let d1 = Complex64::new(kappa / 2.0, delta).norm_sqr();
    let d2 = Complex64::new(kappa / 2.0, delta - problem.omega_m).norm_sqr();
    hw * hw * k_e * k_e * n_in * n_in * problem.g * problem.g * problem.beta_0.norm_sqr()
        / (d1 * d2)
}

/// Single-sided detected power spectral density (W²/Hz) with the delta replaced
/// by a unit-area Lorentzian of FWHM `gamma`. |β₀|² plays the role of n̄.
pub fn spp_spectral_density(
    problem: &SidebandProblem,
    gamma: f64,
    grid: &FrequencyGrid,
) -> Result<Spectrum> {
    positive("gamma", gamma)?;
    if !grid.contains_omega(problem.omega_m) {
        return Err(Error::Invalid {
            name: "grid",
            reason: "frequency grid must straddle the mechanical frequency".into(),
        });
    }
    let pref = spp_prefactor(problem);
    let wm = problem.omega_m;
    Ok(Spectrum::from_fn(*grid, "W^2/Hz", Sidedness::Single, |w| {
        pref * unit_lorentzian(w - wm, gamma)
    }))
}

/// Lorentzian of FWHM γ (rad/s) with unit area over ordinary frequency.
#[inline]
pub fn unit_lorentzian(dw: f64, gamma: f64) -> f64 {
    gamma / (dw * dw + gamma * gamma / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{drive_for_photons, CavityParams};
    use crate::units::hz_to_rad;
    use approx::assert_relative_eq;

    fn problem(beta: f64, order: usize) -> SidebandProblem {
        let kappa = hz_to_rad(500e6);
        let cav = CavityParams::new(hz_to_rad(195e12), kappa, 0.134 * kappa).unwrap();
        let wm = hz_to_rad(3.68e9);
        let drive = drive_for_photons(1.4, wm, &cav).unwrap();
        SidebandProblem::new(
            cav,
            drive,
            hz_to_rad(910e3),
            Complex64::new(beta, 0.0),
            wm,
            order,
        )
        .unwrap()
    }

    #[test]
    fn order_zero_rejected() {
        let p = problem(1.0, 1);
        assert!(p.with_order(0).is_err());
    }

    #[test]
    fn decoupled_matrix_is_diagonal() {
        let p = SidebandProblem {
            g: 0.0,
            ..problem(1.0, 3)
        };
        let (m, _) = build_coupling_matrix(&p);
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if r != c {
                    assert_eq!(m[(r, c)], Complex64::new(0.0, 0.0));
                }
            }
        }
        let sol = solve_sidebands(&p).unwrap();
        let cf = closed_form_sidebands(&p);
        assert_relative_eq!(
            (sol.get(0) - cf.alpha_0).norm(),
            0.0,
            epsilon = 1e-12 * cf.alpha_0.norm()
        );
        for q in [-3, -2, -1, 1, 2, 3] {
            assert_eq!(sol.get(q).norm(), 0.0);
        }
    }

    #[test]
    fn off_diagonals_equal_i_g_beta() {
        let p = problem(2.5, 2);
        let (m, _) = build_coupling_matrix(&p);
        let expect = Complex64::i() * p.g * p.beta_0;
        for r in 0..m.nrows() - 1 {
            assert_eq!(m[(r, r + 1)], expect);
            assert_eq!(m[(r + 1, r)], expect);
        }
    }

    #[test]
    fn three_by_three_inverse_matches_solver() {
        let p = problem(3.0, 1);
        let (m, rhs) = build_coupling_matrix(&p);
        // Hand elimination of the tridiagonal 3x3 system with rhs only in the middle.
        let (a, b, c) = (m[(0, 0)], m[(1, 1)], m[(2, 2)]);
        let e = m[(0, 1)];
        let x0 = rhs[1] / (b - e * e / a - e * e / c);
        let xm = -e * x0 / a;
        let xp = -e * x0 / c;
        let sol = solve_sidebands(&p).unwrap();
        for (got, want) in [(sol.get(-1), xm), (sol.get(0), x0), (sol.get(1), xp)] {
            assert!((got - want).norm() <= 1e-12 * want.norm());
        }
    }

    #[test]
    fn zero_drive_gives_zero_field() {
        let mut p = problem(1.0, 2);
        p.drive.n_in = 0.0;
        let sol = solve_sidebands(&p).unwrap();
        assert!(sol.amplitudes.iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn low_and_high_truncation_agree_in_resolved_regime() {
        let p1 = solve_sidebands(&problem(1.0, 1)).unwrap();
        let p5 = solve_sidebands(&problem(1.0, 5)).unwrap();
        for q in [-1, 1] {
            assert!(relative_change(p1.get(q), p5.get(q)) < 1e-6);
        }
        assert!(!problem(10.0, 1).is_resolved());
    }

    #[test]
    fn refinement_settles() {
        let sol = solve_sidebands_converged(&problem(1.0, DEFAULT_ORDER)).unwrap();
        let higher = solve_sidebands(&problem(1.0, sol.order + 2)).unwrap();
        assert!(relative_change(sol.get(1), higher.get(1)) < 1e-9);
    }

    #[test]
    fn closed_form_limits() {
        assert_eq!(
            closed_form_sidebands(&problem(0.0, 1)).alpha_plus.norm(),
            0.0
        );
        let cf = closed_form_sidebands(&problem(1.0, 1));
        let ratio = cf.alpha_plus.norm() / cf.alpha_minus.norm();
        assert!((ratio - 29.4).abs() < 0.1, "{ratio}");
        let mut p = problem(1.0, 1);
        p.drive.detuning = 0.0;
        let cf = closed_form_sidebands(&p);
        assert_relative_eq!(
            cf.alpha_plus.norm(),
            cf.alpha_minus.norm(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn sideband_power_is_linear_in_beta() {
        assert_eq!(detected_sideband_power(&problem(0.0, 1)).p_sb, 0.0);
        let a = detected_sideband_power(&problem(1.0, 1)).p_sb;
        let b = detected_sideband_power(&problem(2.0, 1)).p_sb;
        assert_relative_eq!(b / a, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn anti_stokes_power_matches_integrated_spp() {
        let p = problem(1.0, 1);
        let pw = detected_sideband_power(&p);
        assert_relative_eq!(
            pw.p_anti_stokes,
            spp_prefactor(&p).sqrt(),
            max_relative = 1e-9
        );
        // Stokes interference is bounded by the amplitude ratio.
        let cf = closed_form_sidebands(&p);
        let bound = cf.alpha_minus.norm() / cf.alpha_plus.norm();
        assert!((pw.p_sb / pw.p_anti_stokes - 1.0).abs() <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn spp_area_and_peak() {
        let p = problem(1.0, 1);
        let gamma = hz_to_rad(44.5e3);
        let gh = gamma / (2.0 * std::f64::consts::PI);
        let grid = FrequencyGrid::centered(3.68e9, 50.0 * gh, 200_001).unwrap();
        let s = spp_spectral_density(&p, gamma, &grid).unwrap();
        let pref = spp_prefactor(&p);
        let in_window = 2.0 / std::f64::consts::PI * (100.0f64).atan();
        assert_relative_eq!(s.integrate(), pref * in_window, max_relative = 1e-6);
        let (_, peak) = s.peak();
        assert_relative_eq!(
            peak,
            pref * 2.0 / (std::f64::consts::PI * gh),
            max_relative = 1e-9
        );
        assert!(spp_spectral_density(&problem(0.0, 1), gamma, &grid)
            .unwrap()
            .values
            .iter()
            .all(|v| *v == 0.0));
        let off = FrequencyGrid::centered(4e9, 1e6, 11).unwrap();
        assert!(spp_spectral_density(&p, gamma, &off).is_err());
    }
}
