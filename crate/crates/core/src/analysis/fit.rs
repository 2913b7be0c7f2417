use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

pub const MAX_ITERATIONS: usize = 200;

/// A/(((ω−ω_m)/(γ/2))² + 1) with γ the full width at half maximum.
#[inline]
pub fn lorentzian(omega: f64, amplitude: f64, omega_m: f64, gamma: f64) -> f64 {
    let u = 2.0 * (omega - omega_m) / gamma;
    amplitude / (1.0 + u * u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzGuess {
    pub amplitude: f64,
    pub omega_m: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzFit {
    /// Peak height, units of the spectrum.
    pub amplitude: f64,
    pub omega_m: f64,
    /// FWHM, rad/s.
    pub gamma: f64,
    /// A·γ/4: the area over ordinary frequency.
    pub integrated_power: f64,
    pub integrated_power_std: f64,
    pub residual_norm: f64,
    /// Covariance of (A, ω_m, γ).
    pub covariance: [[f64; 3]; 3],
    /// Half-widths of the 95% intervals of (A, ω_m, γ).
    pub ci95: [f64; 3],
    pub iterations: usize,
}

impl LorentzFit {
    pub fn std(&self, i: usize) -> f64 {
        self.covariance[i][i].max(0.0).sqrt()
    }
}

struct Problem<'a> {
    x: Vec<f64>,
    y: &'a [f64],
    w: Option<&'a [f64]>,
    center: f64,
}

impl Problem<'_> {
    fn residuals_and_jacobian(&self, p: &Vector3<f64>) -> (f64, Matrix3<f64>, Vector3<f64>) {
        let (a, c, g) = (p[0], p[1], p[2]);
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        let mut cost = 0.0;
        for (i, (&x, &y)) in self.x.iter().zip(self.y).enumerate() {
            let w = self.weight(i);
            let u = 2.0 * (x - c) / g;
            let d = 1.0 + u * u;
            let f = a / d;
            let r = y - f;
            let j = Vector3::new(
                1.0 / d,
                4.0 * a * u / (g * d * d),
                2.0 * a * u * u / (g * d * d),
            );
            jtj += w * j * j.transpose();
            jtr += w * j * r;
            cost += w * r * r;
        }
        (cost, jtj, jtr)
    }

    fn cost(&self, p: &Vector3<f64>) -> f64 {
        self.x
            .iter()
            .zip(self.y)
            .enumerate()
            .map(|(i, (&x, &y))| {
                let r = y - lorentzian(x, p[0], p[1], p[2]);
                self.weight(i) * r * r
            })
            .sum()
    }

    fn weight(&self, i: usize) -> f64 {
        self.w.map_or(1.0, |w| w[i])
    }
}

fn initial_guess(spec: &Spectrum) -> LorentzGuess {
    let v = &spec.values;
    let n = v.len();
    let half = (n / 80).max(2);
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let (ipk, peak) =
        smooth
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |b, (i, x)| if x > b.1 { (i, x) } else { b },
            );
    let half_max = peak / 2.0;
    let left = (0..ipk).rev().find(|&i| smooth[i] < half_max).unwrap_or(0);
    let right = (ipk..n).find(|&i| smooth[i] < half_max).unwrap_or(n - 1);
    let step = spec.grid.omega(1) - spec.grid.omega(0);
    LorentzGuess {
        amplitude: peak,
        omega_m: spec.grid.omega(ipk),
        gamma: ((right - left) as f64 * step).max(2.0 * step),
    }
}

/// Levenberg–Marquardt fit of a single Lorentzian to a background-free spectrum.
pub fn fit_lorentzian(
    spectrum: &Spectrum,
    initial_guess_: Option<LorentzGuess>,
) -> Result<LorentzFit> {
    fit_lorentzian_weighted(spectrum, initial_guess_, None)
}

/// As [`fit_lorentzian`] with per-point relative weights (inverse variances).
pub fn fit_lorentzian_weighted(
    spectrum: &Spectrum,
    initial_guess_: Option<LorentzGuess>,
    weights: Option<&[f64]>,
) -> Result<LorentzFit> {
    let n = spectrum.len();
    if let Some(w) = weights {
        if w.len() != n || w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Invalid {
                name: "weights",
                reason: format!("need {n} finite non-negative weights"),
            });
        }
    }
    if n < 4 {
        return Err(Error::InsufficientData(format!(
            "a Lorentzian fit needs more than 3 points, got {n}"
        )));
    }
    let guess = initial_guess_.unwrap_or_else(|| initial_guess(spectrum));
    if !(guess.gamma > 0.0 && guess.amplitude.is_finite() && guess.omega_m.is_finite()) {
        return Err(Error::Invalid {
            name: "initial guess",
            reason: format!("{guess:?}"),
        });
    }
    let center = spectrum.grid.omega(n / 2);
    let prob = Problem {
        x: spectrum.grid.omegas().map(|w| w - center).collect(),
        y: &spectrum.values,
        w: weights,
        center,
    };
    let scale = Vector3::new(
        guess.amplitude.abs().max(f64::MIN_POSITIVE),
        guess.gamma,
        guess.gamma,
    );
    let mut p = Vector3::new(guess.amplitude, guess.omega_m - center, guess.gamma);
    let (mut cost, mut jtj, mut jtr) = prob.residuals_and_jacobian(&p);
    let total: f64 = (0..n)
        .map(|i| prob.weight(i) * spectrum.values[i].powi(2))
        .sum();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // scaled normal equations
        let s = Matrix3::from_diagonal(&scale);
        let a = s * jtj * s;
        let b = s * jtr;
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = a;
            for k in 0..3 {
                damped[(k, k)] += lambda * a[(k, k)].max(1e-300);
            }
            let Some(step) = damped.lu().solve(&b) else {
                lambda *= 10.0;
                continue;
            };
            let cand = p + s * step;
            if cand[2] <= 0.0 || !cand.iter().all(|x| x.is_finite()) {
                lambda *= 10.0;
                continue;
            }
            let new_cost = prob.cost(&cand);
            if new_cost < cost {
                let rel_step = step.amax();
                let rel_drop = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                p = cand;
                cost = new_cost;
                (_, jtj, jtr) = prob.residuals_and_jacobian(&p);
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel_step < 1e-12 || rel_drop < 1e-15 || cost <= 1e-30 * total {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step exists: at a minimum to machine precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    let fit = finish(&prob, &p, cost, &jtj, n, iterations);
    if !converged {
        return Err(Error::FitNotConverged {
            iterations,
            best_gamma: fit.gamma,
            best: Box::new(fit),
        });
    }
    let within = spectrum
        .grid
        .omegas()
        .filter(|w| (w - fit.omega_m).abs() <= 2.0 * fit.gamma)
        .count();
    if within < 10 {
        return Err(Error::InsufficientData(format!(
            "only {within} points within 2 linewidths of the peak; at least 10 are required"
        )));
    }
    Ok(fit)
}

fn finish(
    prob: &Problem,
    p: &Vector3<f64>,
    cost: f64,
    jtj: &Matrix3<f64>,
    n: usize,
    iterations: usize,
) -> LorentzFit {
    let dof = n.saturating_sub(3).max(1);
    let s2 = cost / dof as f64;
    let cov = jtj
        .try_inverse()
        .map(|m| m * s2)
        .unwrap_or_else(|| Matrix3::from_element(f64::NAN));
    let t = StudentsT::new(0.0, 1.0, dof as f64)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(1.96);
    let (a, g) = (p[0], p[2]);
    let var_p = (g / 4.0).powi(2) * cov[(0, 0)]
        + (a / 4.0).powi(2) * cov[(2, 2)]
        + 2.0 * (g / 4.0) * (a / 4.0) * cov[(0, 2)];
    let mut covariance = [[0.0; 3]; 3];
    for (r, row) in covariance.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = cov[(r, c)];
        }
    }
    LorentzFit {
        amplitude: a,
        omega_m: p[1] + prob.center,
        gamma: g,
        integrated_power: a * g / 4.0,
        integrated_power_std: var_p.max(0.0).sqrt(),
        residual_norm: cost.sqrt(),
        covariance,
        ci95: [0, 1, 2].map(|k| t * cov[(k, k)].max(0.0).sqrt()),
        iterations,
    }
}
