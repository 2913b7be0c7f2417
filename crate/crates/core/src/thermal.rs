//! Thermo-optic thermometry and the decomposition of the intrinsic mechanical
//! damping into temperature and free-carrier channels.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::Read;

use crate::error::{finite, non_negative, positive, Error, Result};
use crate::units::{wavelength_of, SPEED_OF_LIGHT};

/// Field overlap of the optical mode with silicon.
pub const DEFAULT_OVERLAP: f64 = 7.5066e-2;
/// Optical wavelength of the reference mode, m.
pub const DEFAULT_WAVELENGTH: f64 = 1537e-9;

/// Tabulated refractive index n(T) with linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefractiveIndexTable {
    temperatures: Vec<f64>,
    index: Vec<f64>,
}

/// How the index is continued below the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// dn/dT = 0 below the table: largest temperature rise for a given shift.
    Max,
    /// dn/dT frozen at its value on the lower edge: smallest rise.
    Min,
}

impl RefractiveIndexTable {
    pub fn new(temperatures: Vec<f64>, index: Vec<f64>) -> Result<Self> {
        if temperatures.len() != index.len() {
            return Err(Error::Invalid {
                name: "refractive index table",
                reason: format!(
                    "{} temperatures but {} index values",
                    temperatures.len(),
                    index.len()
                ),
            });
        }
        if temperatures.len() < 3 {
            return Err(Error::InsufficientData(
                "refractive index table needs at least 3 rows".into(),
            ));
        }
        for (&t, &n) in temperatures.iter().zip(&index) {
            positive("temperature", t)?;
            positive("refractive index", n)?;
        }
        if temperatures.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid {
                name: "refractive index table",
                reason: "temperatures must be strictly increasing".into(),
            });
        }
        Ok(Self {
            temperatures,
            index,
        })
    }

    /// Reads `T_K,n` rows with a header line; `#` lines are comments.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        if headers.len() != 2 || &headers[0] != "T_K" || &headers[1] != "n" {
            return Err(Error::Format(format!(
                "expected header 'T_K,n', found '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut t, mut n) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {line}: bad number '{s}'")))
            };
            t.push(parse(&rec[0])?);
            n.push(parse(&rec[1])?);
        }
        Self::new(t, n)
    }

    /// Synthetic silicon-like n(T) on 30–300 K, built so that the 17.6 → 300 K
    /// shift of the reference mode is 12.5 nm when dn/dT vanishes below 30 K.
    /// Not literature data.
    pub fn synthetic_silicon() -> Self {
        const N30: f64 = 3.4485;
        const T_KNEE: f64 = 60.0;
        const P: f64 = 8.659_876_008_451_592;
        const A: f64 = 1.047_748_515_661_642_7e-4;
        let shape = |t: f64| {
            let x = t / T_KNEE;
            T_KNEE * x.powf(P) / (1.0 + x.powf(P - 1.0))
        };
        let temps: Vec<f64> = (0..=1080).map(|i| 30.0 + 0.25 * i as f64).collect();
        let index = temps
            .iter()
            .map(|&t| N30 + A * (shape(t) - shape(30.0)))
            .collect();
        Self::new(temps, index).expect("synthetic table is valid")
    }

    pub fn lower(&self) -> f64 {
        self.temperatures[0]
    }

    pub fn upper(&self) -> f64 {
        *self.temperatures.last().unwrap()
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.temperatures
            .iter()
            .copied()
            .zip(self.index.iter().copied())
    }

    /// n(T) inside the table.
    pub fn index_at(&self, t: f64) -> Result<f64> {
        finite("temperature", t)?;
        if t < self.lower() || t > self.upper() {
            return Err(Error::OutOfRange {
                name: "temperature",
                value: t,
                lo: self.lower(),
                hi: self.upper(),
            });
        }
        let k = self
            .temperatures
            .partition_point(|&x| x <= t)
            .clamp(1, self.temperatures.len() - 1);
        let (t0, t1) = (self.temperatures[k - 1], self.temperatures[k]);
        let (n0, n1) = (self.index[k - 1], self.index[k]);
        Ok(n0 + (n1 - n0) * (t - t0) / (t1 - t0))
    }

    /// One-sided second-order dn/dT on the lower edge.
    pub fn lower_edge_slope(&self) -> f64 {
        let (t, n) = (&self.temperatures, &self.index);
        let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
        if (h1 - h2).abs() <= 1e-12 * h1 {
            (-3.0 * n[0] + 4.0 * n[1] - n[2]) / (2.0 * h1)
        } else {
            // three-point Lagrange derivative on an uneven grid
            let d0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2));
            let d1 = (h1 + h2) / (h1 * h2);
            let d2 = -h1 / (h2 * (h1 + h2));
            d0 * n[0] + d1 * n[1] + d2 * n[2]
        }
    }

    /// n(T), continued below the table according to `mode`.
    pub fn index_extended(&self, t: f64, mode: Option<BoundMode>) -> Result<f64> {
        finite("temperature", t)?;
        match mode {
            Some(m) if t < self.lower() => Ok(match m {
                BoundMode::Max => self.index[0],
                BoundMode::Min => self.index[0] + self.lower_edge_slope() * (t - self.lower()),
            }),
            _ => self.index_at(t),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoOpticModel {
    pub overlap: f64,
    /// Optical resonance, rad/s.
    pub omega_ref: f64,
}

impl Default for ThermoOpticModel {
    fn default() -> Self {
        Self {
            overlap: DEFAULT_OVERLAP,
            omega_ref: 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / DEFAULT_WAVELENGTH,
        }
    }
}

impl ThermoOpticModel {
    pub fn new(overlap: f64, omega_ref: f64) -> Result<Self> {
        finite("overlap", overlap)?;
        if overlap <= 0.0 || overlap >= 1.0 {
            return Err(Error::OutOfRange {
                name: "overlap",
                value: overlap,
                lo: 0.0,
                hi: 1.0,
            });
        }
        positive("omega_ref", omega_ref)?;
        Ok(Self { overlap, omega_ref })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoOpticShift {
    /// ω − ω₀, rad/s.
    pub angular: f64,
    /// λ − λ₀ to first order, m. Positive is a red shift.
    pub wavelength: f64,
}

/// Resonance shift on warming from `t0` to `t`. `mode` allows temperatures
/// below the table.
pub fn thermo_optic_shift(
    t: f64,
    t0: f64,
    model: &ThermoOpticModel,
    table: &RefractiveIndexTable,
    mode: Option<BoundMode>,
) -> Result<ThermoOpticShift> {
    let n0 = table.index_extended(t0, mode)?;
    let n = table.index_extended(t, mode)?;
    let angular = -n0 * model.omega_ref * model.overlap * (n - n0);
    Ok(ThermoOpticShift {
        angular,
        wavelength: -wavelength_of(model.omega_ref) * angular / model.omega_ref,
    })
}

/// Temperature rise above `t0` that produces a red shift of `shift` metres.
pub fn bound_temperature_rise(
    shift: f64,
    t0: f64,
    model: &ThermoOpticModel,
    table: &RefractiveIndexTable,
    mode: BoundMode,
) -> Result<f64> {
    non_negative("shift", shift)?;
    positive("t0", t0)?;
    if t0 >= table.lower() {
        return Err(Error::Invalid {
            name: "t0",
            reason: format!(
                "bound modes apply to reference temperatures below {} K",
                table.lower()
            ),
        });
    }
    if shift == 0.0 {
        return Ok(0.0);
    }
    let f =
        |t: f64| thermo_optic_shift(t, t0, model, table, Some(mode)).map(|s| s.wavelength - shift);
    let (mut lo, mut hi) = (t0, table.upper());
    let top = f(hi)?;
    if top < 0.0 {
        return Err(Error::OutOfRange {
            name: "shift",
            value: shift,
            lo: 0.0,
            hi: top + shift,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi) - t0)
}

/// value = a·x^b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub a: f64,
    pub b: f64,
    /// Covariance of (a, b).
    pub covariance: [[f64; 2]; 2],
}

impl PowerLaw {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            covariance: [[0.0; 2]; 2],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x == 0.0 && self.b > 0.0 {
            0.0
        } else {
            self.a * x.powf(self.b)
        }
    }
}

/// Least-squares line through (ln x, ln y).
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<PowerLaw> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    for &(x, y) in samples {
        positive("power-law abscissa", x)?;
        positive("power-law value", y)?;
    }
    let n = samples.len() as f64;
    let lx: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ly: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData(
            "power-law fit needs at least two distinct abscissae".into(),
        ));
    }
    let b = sxy / sxx;
    let ln_a = my - b * mx;
    let a = ln_a.exp();
    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - ln_a - b * x).powi(2))
        .sum();
    let s2 = if samples.len() > 2 {
        ssr / (n - 2.0)
    } else {
        0.0
    };
    let var_b = s2 / sxx;
    let var_ln_a = s2 * (1.0 / n + mx * mx / sxx);
    let cov_ln_a_b = -s2 * mx / sxx;
    Ok(PowerLaw {
        a,
        b,
        covariance: [[a * a * var_ln_a, a * cov_ln_a_b], [a * cov_ln_a_b, var_b]],
    })
}

/// γ_{i,T}(T) = Σ_k c_k (T − T_ref)^k, k ≥ 1, valid on [T_ref, T_max].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialDamping {
    pub t_ref: f64,
    pub t_max: f64,
    /// c_1, c_2, ... in rad/s per K^k.
    pub coeffs: Vec<f64>,
}

impl PolynomialDamping {
    pub fn eval(&self, t: f64) -> Result<f64> {
        finite("temperature", t)?;
        if t < self.t_ref - 1e-9 || t > self.t_max {
            return Err(Error::OutOfRange {
                name: "temperature",
                value: t,
                lo: self.t_ref,
                hi: self.t_max,
            });
        }
        let dt = t - self.t_ref;
        Ok(self.coeffs.iter().rev().fold(0.0, |acc, c| (acc + c) * dt))
    }
}

/// Fits γ(T) − γ_i⁰ = ω_m/Q_m(T) − γ_i⁰ from (T, Q_m) samples.
pub fn fit_thermal_damping(
    samples: &[(f64, f64)],
    omega_m: f64,
    gamma_i0: f64,
    t_ref: f64,
    degree: usize,
) -> Result<PolynomialDamping> {
    positive("omega_m", omega_m)?;
    positive("gamma_i0", gamma_i0)?;
    if degree == 0 {
        return Err(Error::Invalid {
            name: "degree",
            reason: "polynomial degree must be at least 1".into(),
        });
    }
    if samples.len() < degree {
        return Err(Error::InsufficientData(format!(
            "degree {degree} fit needs at least {degree} samples"
        )));
    }
    let mut t_max = t_ref;
    for &(t, q) in samples {
        finite("temperature", t)?;
        positive("Q_m", q)?;
        t_max = t_max.max(t);
    }
    let a = DMatrix::from_fn(samples.len(), degree, |r, c| {
        (samples[r].0 - t_ref).powi(c as i32 + 1)
    });
    let y = DVector::from_iterator(
        samples.len(),
        samples.iter().map(|&(_, q)| omega_m / q - gamma_i0),
    );
    let coeffs = a
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::InsufficientData(format!("damping fit failed: {e}")))?;
    Ok(PolynomialDamping {
        t_ref,
        t_max,
        coeffs: coeffs.iter().copied().collect(),
    })
}

/// Mode temperature as a function of intracavity photon number.
pub trait HeatingMap: Send + Sync {
    fn temperature(&self, n_c: f64) -> f64;
}

/// T(n_c) = T_base + ΔT_ref·n_c/n_ref.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearHeating {
    pub base: f64,
    pub rise_at_reference: f64,
    pub reference_photons: f64,
}

impl HeatingMap for LinearHeating {
    fn temperature(&self, n_c: f64) -> f64 {
        self.base + self.rise_at_reference * n_c / self.reference_photons
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> HeatingMap for F {
    fn temperature(&self, n_c: f64) -> f64 {
        self(n_c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingDecomposition {
    pub gamma_i0: f64,
    pub thermal: PolynomialDamping,
    pub free_carrier: PowerLaw,
    /// Free-carrier blue shift of the optical mode versus n_c, m.
    pub free_carrier_shift: Option<PowerLaw>,
}

impl DampingDecomposition {
    /// Synthetic defaults: γ_{i,T} grows quadratically to 2π·17.571 kHz at +19 K,
    /// γ_{i,FC} = 2π·10.708 Hz·n_c. Shapes only, not measured coefficients.
    pub fn synthetic_default(gamma_i0: f64, t_ref: f64) -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        Self {
            gamma_i0,
            thermal: PolynomialDamping {
                t_ref,
                t_max: 300.0,
                coeffs: vec![0.0, two_pi * 17.571e3 / (19.0 * 19.0)],
            },
            free_carrier: PowerLaw::new(two_pi * 10.708, 1.0),
            free_carrier_shift: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingBreakdown {
    pub intrinsic: f64,
    pub thermal: f64,
    pub free_carrier: f64,
    pub total: f64,
}

pub fn total_intrinsic_damping(
    n_c: f64,
    temperature: f64,
    d: &DampingDecomposition,
) -> Result<DampingBreakdown> {
    non_negative("n_c", n_c)?;
    let thermal = d.thermal.eval(temperature)?;
    let free_carrier = d.free_carrier.eval(n_c);
    for (name, v) in [
        ("thermal damping", thermal),
        ("free-carrier damping", free_carrier),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Invalid {
                name,
                reason: format!("model evaluates to {v} at n_c = {n_c}, T = {temperature} K"),
            });
        }
    }
    Ok(DampingBreakdown {
        intrinsic: d.gamma_i0,
        thermal,
        free_carrier,
        total: d.gamma_i0 + thermal + free_carrier,
    })
}

/// Optomechanical damping at arbitrary detuning:
/// g²n_cκ[1/((Δ−ω_m)²+κ²/4) − 1/((Δ+ω_m)²+κ²/4)].
pub fn far_detuned_gamma_om(g: f64, n_c: f64, kappa: f64, detuning: f64, omega_m: f64) -> f64 {
    g * g * n_c * detuning_shape(kappa, detuning, omega_m)
}

fn detuning_shape(kappa: f64, detuning: f64, omega_m: f64) -> f64 {
    let k2 = kappa * kappa / 4.0;
    let (a, b) = (detuning - omega_m, detuning + omega_m);
    kappa * (1.0 / (a * a + k2) - 1.0 / (b * b + k2))
}

/// Detuning dependence assumed for γ_OM when separating it from γ_i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DetuningModel {
    /// γ_OM ∝ Δ⁻².
    InverseSquare,
    /// Full sideband expression with known κ and ω_m.
    Exact { kappa: f64, omega_m: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessLossFit {
    /// Intercept: intrinsic damping at this n_c, rad/s.
    pub gamma_i: f64,
    pub slope: f64,
    pub residual_rms: f64,
    /// Standard error of the intercept.
    pub gamma_i_std: f64,
}

/// Regresses γ_cooled(Δ) = γ_i + s·f(Δ) over far-detuned samples (Δ, γ_cooled).
pub fn extract_excess_loss(samples: &[(f64, f64)], model: DetuningModel) -> Result<ExcessLossFit> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(
            "excess-loss extraction needs at least 3 detunings".into(),
        ));
    }
    let f = |d: f64| match model {
        DetuningModel::InverseSquare => 1.0 / (d * d),
        DetuningModel::Exact { kappa, omega_m } => detuning_shape(kappa, d, omega_m),
    };
    for &(d, gm) in samples {
        positive("detuning", d)?;
        finite("gamma_cooled", gm)?;
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| f(s.0)).collect();
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let xs: Vec<f64> = xs.iter().map(|x| x / scale).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("detunings must differ".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(samples)
        .map(|(x, s)| (x - mx) * (s.1 - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(samples)
        .map(|(x, s)| (s.1 - intercept - slope * x).powi(2))
        .sum();
    let s2 = ssr / (n - 2.0);
    Ok(ExcessLossFit {
        gamma_i: intercept,
        slope: slope / scale,
        residual_rms: (ssr / n).sqrt(),
        gamma_i_std: (s2 * (1.0 / n + mx * mx / sxx)).sqrt(),
    })
}
